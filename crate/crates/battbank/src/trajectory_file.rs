//! Plain-text export of a background trajectory.
//!
//! ```text
//! # seed=7 steps=3
//! 0
//! 2
//! 3
//! 1
//! ```
//!
//! The header carries the seed and horizon `T`; the body lists the `T + 1`
//! background-state indices, one per line, starting from `x0`.

use std::fmt::Write as _;

use battbank_core::Trajectory;

pub fn format_trajectory(traj: &Trajectory) -> String {
    let mut out = format!("# seed={} steps={}\n", traj.seed, traj.steps());
    for x in &traj.x_path {
        writeln!(out, "{x}").expect("writing to a String cannot fail");
    }
    out
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trajectory file")?;
    let fields = header
        .strip_prefix("# ")
        .ok_or_else(|| format!("malformed header: {header:?}"))?;
    let mut seed = None;
    let mut steps = None;
    for field in fields.split_whitespace() {
        match field.split_once('=') {
            Some(("seed", v)) => seed = Some(v.parse::<u64>().map_err(|e| format!("seed: {e}"))?),
            Some(("steps", v)) => {
                steps = Some(v.parse::<usize>().map_err(|e| format!("steps: {e}"))?)
            }
            _ => return Err(format!("unknown header field {field:?}")),
        }
    }
    let seed = seed.ok_or("header lacks seed")?;
    let steps = steps.ok_or("header lacks steps")?;
    let x_path = lines
        .enumerate()
        .map(|(i, line)| {
            line.trim()
                .parse::<usize>()
                .map_err(|e| format!("line {}: {e}", i + 2))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if x_path.len() != steps + 1 {
        return Err(format!(
            "header says {steps} steps but body has {} states",
            x_path.len()
        ));
    }
    Ok(Trajectory { seed, x_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use battbank_core::{generate_trajectory, reference};

    #[test]
    fn layout() {
        let traj = Trajectory {
            seed: 7,
            x_path: vec![0, 2, 3, 1],
        };
        assert_eq!(format_trajectory(&traj), "# seed=7 steps=3\n0\n2\n3\n1\n");
    }

    #[test]
    fn round_trip() {
        let traj = generate_trajectory(&reference::chain(), 1, 500, 42);
        assert_eq!(parse_trajectory(&format_trajectory(&traj)).unwrap(), traj);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(parse_trajectory("# seed=1 steps=2\n0\n1\n").is_err());
        assert!(parse_trajectory("0\n1\n").is_err());
    }
}
