//! Tab-separated trajectory dumps: `step action reward terminal bits`.
//!
//! Line 0 is the reset observation with action `-`. Rewards are written as
//! integers since both games only pay whole points.

use std::fmt::Write as _;

use super::Environment;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub action: Option<usize>,
    pub reward: i64,
    pub terminal: bool,
    pub bits: String,
}

impl TrajectoryRecord {
    pub fn to_line(&self) -> String {
        let action = self
            .action
            .map_or_else(|| "-".to_string(), |a| a.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.step, action, self.reward, self.terminal as u8, self.bits
        )
    }
}

/// Resets `env` and plays `actions`, stopping early at a terminal step.
pub fn record<E: Environment + ?Sized>(
    env: &mut E,
    actions: &[usize],
) -> Result<Vec<TrajectoryRecord>> {
    let obs = env.reset();
    let mut out = vec![TrajectoryRecord {
        step: 0,
        action: None,
        reward: 0,
        terminal: false,
        bits: obs.to_bitstring(),
    }];
    for (t, &a) in actions.iter().enumerate() {
        let s = env.step(a)?;
        out.push(TrajectoryRecord {
            step: t + 1,
            action: Some(a),
            reward: s.reward as i64,
            terminal: s.terminal,
            bits: s.obs.to_bitstring(),
        });
        if s.terminal {
            break;
        }
    }
    Ok(out)
}

pub fn to_text(records: &[TrajectoryRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}", r.to_line());
    }
    s
}

pub fn parse(text: &str, origin: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::parse(origin, n + 1, msg);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(err("expected 5 tab-separated fields"));
        }
        let step = fields[0].parse().map_err(|_| err("bad step"))?;
        let action = match fields[1] {
            "-" => None,
            a => Some(a.parse().map_err(|_| err("bad action"))?),
        };
        let reward = fields[2].parse().map_err(|_| err("bad reward"))?;
        let terminal = match fields[3] {
            "0" => false,
            "1" => true,
            _ => return Err(err("terminal must be 0 or 1")),
        };
        if !fields[4].bytes().all(|b| b == b'0' || b == b'1') {
            return Err(err("observation must be a bitstring"));
        }
        out.push(TrajectoryRecord {
            step,
            action,
            reward,
            terminal,
            bits: fields[4].to_string(),
        });
    }
    Ok(out)
}
