//! Concealment and binding metrics, and reports over them.

use serde::Serialize;
use serde_json::Value;

use crate::attacks::{branch_cheat_metrics, run_attack};
use crate::demos::find_demo;
use crate::error::{Error, Result};
use crate::linalg::{fidelity, COMPOSED_TOL};
use crate::protocol::{mode_consistency_with, Executor, ProtocolScript};
use crate::system::{reduced_state, transcript_label, Party, Symbol};

/// Which executions an analysis runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Purified,
    Branches,
    #[default]
    Both,
}

impl Mode {
    fn purified(self) -> bool {
        self != Mode::Branches
    }

    fn branches(self) -> bool {
        self != Mode::Purified
    }
}

/// Parties whose joint view defines concealment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Observers {
    #[default]
    Bob,
    BobEnv,
}

impl Observers {
    pub fn parties(self) -> &'static [Party] {
        match self {
            Observers::Bob => &[Party::Bob],
            Observers::BobEnv => &[Party::Bob, Party::Environment],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AnalysisOptions {
    pub mode: Mode,
    pub observers: Observers,
    /// Prefix length at which concealment is measured; defaults to the end
    /// of the commit phase.
    pub until: Option<usize>,
    pub executor: Executor,
}

/// Fidelity between the observers' states for the two committed bits after
/// `steps[..until]`.
pub fn concealment_at(
    exec: &Executor,
    script: &ProtocolScript,
    observers: &[Party],
    until: usize,
) -> Result<f64> {
    let s0 = exec.purified(script, 0, until)?;
    let s1 = exec.purified(script, 1, until)?;
    fidelity(
        &reduced_state(&s0, observers)?,
        &reduced_state(&s1, observers)?,
    )
}

/// Concealment at the end of the commit phase.
pub fn concealment(script: &ProtocolScript, observers: &[Party]) -> Result<f64> {
    let commit = script.commit_phase_end()?;
    concealment_at(&Executor::default(), script, observers, commit + 1)
}

/// `(F_B, F_BE, F_B − F_BE)` at the end of the commit phase. With noiseless
/// broadcasts the environment learns nothing Bob does not, so the gap
/// vanishes.
pub fn noiseless_equality_check(
    exec: &Executor,
    script: &ProtocolScript,
) -> Result<(f64, f64, f64)> {
    let until = script.commit_phase_end()? + 1;
    let s0 = exec.purified(script, 0, until)?;
    let s1 = exec.purified(script, 1, until)?;
    let f = |parties: &[Party]| -> Result<f64> {
        fidelity(&reduced_state(&s0, parties)?, &reduced_state(&s1, parties)?)
    };
    let fb = f(&[Party::Bob])?;
    let fbe = f(&[Party::Bob, Party::Environment])?;
    Ok((fb, fbe, fb - fbe))
}

/// Per-transcript concealment term.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchConcealment {
    pub transcript: Vec<Symbol>,
    pub p0: f64,
    pub p1: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcMetrics {
    /// Fidelity of Bob's transcript-averaged states.
    pub conc: f64,
    /// `Σ_γ √(p0 p1) F_γ` over common transcripts.
    pub conc_prime: f64,
    pub per_branch: Vec<BranchConcealment>,
    pub pruned_mass: f64,
}

/// Standard and branch-averaged concealment at the end of the commit phase.
///
/// The averaged states are Bob's own registers, which hold his copy of every
/// public symbol; they are therefore block-diagonal over transcripts
/// without extra tagging.
pub fn conc_metrics(exec: &Executor, script: &ProtocolScript) -> Result<ConcMetrics> {
    let until = script.commit_phase_end()? + 1;
    let e0 = exec.branches(script, 0, until)?;
    let e1 = exec.branches(script, 1, until)?;
    let conc = fidelity(
        &e0.averaged_state(&[Party::Bob])?,
        &e1.averaged_state(&[Party::Bob])?,
    )?;
    let mut per_branch = Vec::new();
    for a in &e0.branches {
        let Ok(k) = e1
            .branches
            .binary_search_by(|b| b.transcript.cmp(&a.transcript))
        else {
            continue;
        };
        let b = &e1.branches[k];
        per_branch.push(BranchConcealment {
            transcript: a.transcript.clone(),
            p0: a.probability,
            p1: b.probability,
            fidelity: fidelity(
                &reduced_state(&a.config, &[Party::Bob])?,
                &reduced_state(&b.config, &[Party::Bob])?,
            )?,
        });
    }
    let conc_prime = per_branch
        .iter()
        .map(|r| (r.p0 * r.p1).sqrt() * r.fidelity)
        .sum();
    Ok(ConcMetrics {
        conc,
        conc_prime,
        per_branch,
        pruned_mass: e0.pruned_mass + e1.pruned_mass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub transcript: String,
    pub p0: f64,
    pub p1: f64,
    pub f_gamma: f64,
    pub cheat_overlap: f64,
}

/// Flat summary of one protocol analysis. Fields absent for the chosen mode
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub protocol_id: String,
    pub commit_step: usize,
    pub observers: &'static str,
    pub measured_at: usize,
    pub concealment_f: Option<f64>,
    pub epsilon: Option<f64>,
    pub concealment_bob: Option<f64>,
    pub concealment_bob_env: Option<f64>,
    pub noiseless_gap: Option<f64>,
    pub attack_success: Option<f64>,
    pub global_overlap: Option<f64>,
    pub conc_standard: Option<f64>,
    pub conc_prime: Option<f64>,
    pub cheat_prime: Option<f64>,
    pub pruned_mass: Option<f64>,
    pub per_branch: Option<Vec<BranchRow>>,
    pub mode_deviation: Option<f64>,
    pub nogo_holds: Option<bool>,
}

/// Runs every metric the options ask for.
pub fn analyze(script: &ProtocolScript, options: &AnalysisOptions) -> Result<SecurityReport> {
    script.validate()?;
    let exec = &options.executor;
    let commit = script.commit_phase_end()?;
    let measured_at = options.until.unwrap_or(commit + 1);
    if measured_at > script.steps.len() {
        return Err(Error::argument(format!(
            "step bound {measured_at} exceeds script length {}",
            script.steps.len()
        )));
    }
    let mut report = SecurityReport {
        protocol_id: script.id.clone(),
        commit_step: commit,
        observers: match options.observers {
            Observers::Bob => "bob",
            Observers::BobEnv => "bob_env",
        },
        measured_at,
        concealment_f: None,
        epsilon: None,
        concealment_bob: None,
        concealment_bob_env: None,
        noiseless_gap: None,
        attack_success: None,
        global_overlap: None,
        conc_standard: None,
        conc_prime: None,
        cheat_prime: None,
        pruned_mass: None,
        per_branch: None,
        mode_deviation: None,
        nogo_holds: None,
    };

    if options.mode.purified() {
        let f = concealment_at(exec, script, options.observers.parties(), measured_at)?;
        report.concealment_f = Some(f);
        report.epsilon = Some(1.0 - f);
        let (fb, fbe, gap) = noiseless_equality_check(exec, script)?;
        report.concealment_bob = Some(fb);
        report.concealment_bob_env = Some(fbe);
        report.noiseless_gap = Some(gap);
        let attack = run_attack(exec, script)?;
        report.attack_success = Some(attack.attack_success);
        report.global_overlap = Some(attack.cheat.achieved_overlap);
        report.nogo_holds = Some(attack.attack_success >= f - COMPOSED_TOL);
    }

    if options.mode.branches() {
        let conc = conc_metrics(exec, script)?;
        let cheat = branch_cheat_metrics(exec, script)?;
        report.conc_standard = Some(conc.conc);
        report.conc_prime = Some(conc.conc_prime);
        report.cheat_prime = Some(cheat.cheat_prime);
        report.pruned_mass = Some(conc.pruned_mass);
        report.global_overlap.get_or_insert(cheat.global_overlap);
        report.per_branch = Some(
            conc.per_branch
                .iter()
                .zip(&cheat.per_branch)
                .map(|(c, k)| {
                    debug_assert_eq!(c.transcript, k.transcript);
                    BranchRow {
                        transcript: transcript_label(&c.transcript),
                        p0: c.p0,
                        p1: c.p1,
                        f_gamma: c.fidelity,
                        cheat_overlap: k.overlap,
                    }
                })
                .collect(),
        );
    }

    if options.mode == Mode::Both {
        let mut worst: f64 = 0.0;
        for bit in 0..2 {
            worst = worst.max(mode_consistency_with(exec, script, bit)?);
        }
        report.mode_deviation = Some(worst);
    }
    Ok(report)
}

/// Rounds to 12 significant digits; `-0.0` becomes `0.0`.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig12(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serialises any report-like value with sorted keys and rounded floats.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

impl SecurityReport {
    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub concealment: f64,
    pub attack_success: f64,
    pub cheat_prime: f64,
    pub epsilon: f64,
    pub nogo_holds: bool,
}

/// Full analysis at each grid point of a demo family, sorted by parameter.
pub fn tradeoff_sweep(exec: &Executor, family: &str, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let demo = find_demo(family)?;
    if demo.parameter.is_none() {
        return Err(Error::argument(format!(
            "demo {family} has no parameter to sweep"
        )));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let options = AnalysisOptions {
        executor: *exec,
        ..AnalysisOptions::default()
    };
    grid.into_iter()
        .map(|theta| {
            let script = demo.build(Some(theta))?;
            let r = analyze(
                &script,
                &AnalysisOptions {
                    mode: Mode::Both,
                    ..options
                },
            )?;
            Ok(SweepRow {
                theta,
                concealment: r.concealment_f.unwrap_or_default(),
                attack_success: r.attack_success.unwrap_or_default(),
                cheat_prime: r.cheat_prime.unwrap_or_default(),
                epsilon: r.epsilon.unwrap_or_default(),
                nogo_holds: r.nogo_holds.unwrap_or(false),
            })
        })
        .collect()
}

/// CSV with header `theta,concealment,attack_success,cheat_prime,epsilon,nogo_holds`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(SweepRow {
            theta: round_sig12(r.theta),
            concealment: round_sig12(r.concealment),
            attack_success: round_sig12(r.attack_success),
            cheat_prime: round_sig12(r.cheat_prime),
            epsilon: round_sig12(r.epsilon),
            nogo_holds: r.nogo_holds,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record([
            "theta",
            "concealment",
            "attack_success",
            "cheat_prime",
            "epsilon",
            "nogo_holds",
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demos::build_demo;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn revealing_and_concealing_endpoints() {
        let r = analyze(
            &build_demo("revealing", None).unwrap(),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!(r.concealment_f.unwrap() < 1e-9);
        assert!(r.attack_success.unwrap() < 1e-8);
        let p = analyze(
            &build_demo("perfectly_concealing", None).unwrap(),
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!((p.concealment_f.unwrap() - 1.0).abs() < 1e-9);
        assert!((p.attack_success.unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn theta_family_concealment_is_cos_theta() {
        let s = build_demo("theta_family", Some(FRAC_PI_3)).unwrap();
        assert!((concealment(&s, &[Party::Bob]).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rounding_is_canonical() {
        assert_eq!(round_sig12(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(round_sig12(0.1 + 0.2), 0.3);
        assert_eq!(round_sig12(1.0 - 1e-15), 1.0);
        assert_eq!(round_sig12(123456.7890123456), 123456.789012);
    }

    #[test]
    fn json_keys_sorted() {
        let r = analyze(
            &build_demo("theta_family", None).unwrap(),
            &AnalysisOptions::default(),
        )
        .unwrap();
        let json = r.to_json().unwrap();
        let keys: Vec<&str> = json
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn sweep_rows_sorted_and_csv_header() {
        let exec = Executor::default();
        let rows = tradeoff_sweep(&exec, "theta_family", &[FRAC_PI_2, 0.0]).unwrap();
        assert_eq!(rows[0].theta, 0.0);
        let csv = sweep_csv(&rows).unwrap();
        assert!(
            csv.starts_with("theta,concealment,attack_success,cheat_prime,epsilon,nogo_holds\n")
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(tradeoff_sweep(&exec, "revealing", &[0.0]).is_err());
        assert!(tradeoff_sweep(&exec, "missing", &[0.0]).is_err());
    }

    #[test]
    fn branches_only_mode_skips_purified_fields() {
        let s = build_demo("broadcast_bc", None).unwrap();
        let r = analyze(
            &s,
            &AnalysisOptions {
                mode: Mode::Branches,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.concealment_f.is_none() && r.nogo_holds.is_none());
        assert_eq!(r.per_branch.as_ref().unwrap().len(), 4);
    }
}
