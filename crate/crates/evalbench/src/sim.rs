//! Closed-loop walk benchmark: every policy on every plan for several trials.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sightwalk_synth::{simulate_walk, Policy, ScenePlan, Trajectory, WalkConfig};

use crate::{Error, Result};

/// A named policy constructor. `make(seed)` is called once per trial, so
/// stochastic policies get a fresh, seeded stream every time.
pub struct PolicySpec<'a> {
    pub name: String,
    pub make: Box<dyn Fn(u64) -> Box<dyn Policy + 'a> + 'a>,
}

impl<'a> PolicySpec<'a> {
    pub fn new(name: impl Into<String>, make: impl Fn(u64) -> Box<dyn Policy + 'a> + 'a) -> Self {
        Self {
            name: name.into(),
            make: Box::new(make),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub policy: String,
    pub plan: usize,
    pub trial: usize,
    pub seed: u64,
    pub steps: usize,
    pub collisions: usize,
    pub reached_goal: bool,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyStats {
    pub policy: String,
    pub trials: usize,
    pub goals_reached: usize,
    /// Mean steps over the trials that reached the goal.
    pub mean_steps_to_goal: Option<f64>,
    pub total_collisions: usize,
    pub trials_with_collision: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub policies: Vec<PolicyStats>,
    pub trials: Vec<TrialRecord>,
}

/// Seed for one (plan, trial) pair; shared by all policies so they face the
/// same camera jitter and sensor noise.
pub fn trial_seed(base: u64, plan: usize, trial: usize) -> u64 {
    let mut z = base ^ (plan as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (trial as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn benchmark_navigation(
    plans: &[ScenePlan],
    policies: &[PolicySpec<'_>],
    trials: usize,
    walk: &WalkConfig,
) -> Result<SimReport> {
    if plans.is_empty() || policies.is_empty() || trials == 0 {
        return Err(Error::Input("need at least one plan, one policy and one trial".into()));
    }
    let mut records = Vec::new();
    let mut stats = Vec::new();
    for spec in policies {
        let mut st = PolicyStats {
            policy: spec.name.clone(),
            trials: 0,
            goals_reached: 0,
            mean_steps_to_goal: None,
            total_collisions: 0,
            trials_with_collision: 0,
        };
        let mut goal_steps = 0usize;
        for (p, plan) in plans.iter().enumerate() {
            for t in 0..trials {
                let seed = trial_seed(walk.seed, p, t);
                let mut policy = (spec.make)(seed);
                let cfg = WalkConfig { seed, ..*walk };
                let tr = simulate_walk(plan, policy.as_mut(), &cfg)?;
                st.trials += 1;
                st.total_collisions += tr.collisions;
                st.trials_with_collision += usize::from(tr.collisions > 0);
                if tr.reached_goal {
                    st.goals_reached += 1;
                    goal_steps += tr.steps;
                }
                records.push(TrialRecord {
                    policy: spec.name.clone(),
                    plan: p,
                    trial: t,
                    seed,
                    steps: tr.steps,
                    collisions: tr.collisions,
                    reached_goal: tr.reached_goal,
                    trajectory: tr,
                });
            }
        }
        if st.goals_reached > 0 {
            st.mean_steps_to_goal = Some(goal_steps as f64 / st.goals_reached as f64);
        }
        stats.push(st);
    }
    Ok(SimReport {
        policies: stats,
        trials: records,
    })
}

impl SimReport {
    pub fn stats(&self, policy: &str) -> Option<&PolicyStats> {
        self.policies.iter().find(|s| s.policy == policy)
    }

    /// One row per trial: `policy,plan,trial,seed,steps,collisions,reached_goal`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("policy,plan,trial,seed,steps,collisions,reached_goal\n");
        for r in &self.trials {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.policy,
                r.plan,
                r.trial,
                r.seed,
                r.steps,
                r.collisions,
                u8::from(r.reached_goal)
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:<12}{:>8}{:>8}{:>12}{:>12}{:>10}\n",
            "policy", "trials", "goals", "mean steps", "collisions", "hit runs"
        );
        for p in &self.policies {
            let steps = p.mean_steps_to_goal.map_or_else(|| "-".into(), |v| format!("{v:.1}"));
            let _ = writeln!(
                s,
                "{:<12}{:>8}{:>8}{:>12}{:>12}{:>10}",
                p.policy, p.trials, p.goals_reached, steps, p.total_collisions, p.trials_with_collision
            );
        }
        s
    }

    /// Writes `sim_report.csv`, `sim_summary.txt` and one trajectory CSV per
    /// trial under `trajectories/`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let tdir = dir.join("trajectories");
        std::fs::create_dir_all(&tdir)?;
        std::fs::write(dir.join("sim_report.csv"), self.to_csv())?;
        std::fs::write(dir.join("sim_summary.txt"), self.summary())?;
        for r in &self.trials {
            let name = format!("{}_plan{:02}_trial{:02}.csv", r.policy, r.plan, r.trial);
            std::fs::write(tdir.join(name), r.trajectory.to_csv())?;
        }
        Ok(())
    }
}
