use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::Line;

/// DC power transfer distribution factors relative to `slack`.
///
/// Returns an `L × N` matrix; the slack column is identically zero.
pub fn compute_gsf(n_buses: usize, lines: &[Line], slack: usize) -> Result<Vec<Vec<f64>>> {
    if slack >= n_buses {
        return Err(Error::InvalidNetwork(format!(
            "slack bus {slack} out of range for {n_buses} buses"
        )));
    }
    for (j, line) in lines.iter().enumerate() {
        if line.from >= n_buses || line.to >= n_buses || line.from == line.to {
            return Err(Error::InvalidNetwork(format!(
                "line {j} has invalid endpoints {}→{}",
                line.from, line.to
            )));
        }
        if !(line.reactance > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "line {j} has non-positive reactance {}",
                line.reactance
            )));
        }
    }
    check_connected(n_buses, lines, slack)?;

    // reduced index: bus -> row of B without the slack
    let reduced: Vec<Option<usize>> = (0..n_buses)
        .scan(0usize, |next, b| {
            Some(if b == slack {
                None
            } else {
                *next += 1;
                Some(*next - 1)
            })
        })
        .collect();
    let m = n_buses - 1;
    let mut b = DMatrix::<f64>::zeros(m, m);
    for line in lines {
        let y = 1.0 / line.reactance;
        let (f, t) = (reduced[line.from], reduced[line.to]);
        if let Some(f) = f {
            b[(f, f)] += y;
        }
        if let Some(t) = t {
            b[(t, t)] += y;
        }
        if let (Some(f), Some(t)) = (f, t) {
            b[(f, t)] -= y;
            b[(t, f)] -= y;
        }
    }

    let x = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        b.cholesky()
            .ok_or(Error::Disconnected { bus: slack })?
            .inverse()
    };
    let reactance_row = |bus: usize, col: usize| -> f64 {
        match (reduced[bus], reduced[col]) {
            (Some(r), Some(c)) => x[(r, c)],
            _ => 0.0,
        }
    };

    Ok(lines
        .iter()
        .map(|line| {
            (0..n_buses)
                .map(|i| (reactance_row(line.from, i) - reactance_row(line.to, i)) / line.reactance)
                .collect()
        })
        .collect())
}

fn check_connected(n_buses: usize, lines: &[Line], slack: usize) -> Result<()> {
    let mut adjacency = vec![Vec::new(); n_buses];
    for line in lines {
        adjacency[line.from].push(line.to);
        adjacency[line.to].push(line.from);
    }
    let mut seen = vec![false; n_buses];
    seen[slack] = true;
    let mut queue = VecDeque::from([slack]);
    while let Some(bus) = queue.pop_front() {
        for &next in &adjacency[bus] {
            if !seen[next] {
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(bus) => Err(Error::Disconnected { bus }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_bus_injection_flows_against_orientation() {
        let gsf = compute_gsf(2, &[Line::new(0, 1, 0.1, 100.0)], 0).unwrap();
        assert_eq!(gsf.len(), 1);
        assert_eq!(gsf[0][0], 0.0);
        assert_abs_diff_eq!(gsf[0][1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_bus_ring_splits_two_thirds_one_third() {
        // lines: 1→2, 2→3, 3→1 with equal reactance, slack bus 1.
        let lines = vec![
            Line::new(0, 1, 0.2, 100.0),
            Line::new(1, 2, 0.2, 100.0),
            Line::new(2, 0, 0.2, 100.0),
        ];
        let gsf = compute_gsf(3, &lines, 0).unwrap();
        // injection at bus 2: 2/3 flows 2→1 (against 1→2), 1/3 via 2→3→1.
        assert_abs_diff_eq!(gsf[0][1], -2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gsf[1][1], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gsf[2][1], 1.0 / 3.0, epsilon = 1e-12);
        for row in &gsf {
            assert_eq!(row[0], 0.0);
        }
    }

    #[test]
    fn disconnected_network_is_rejected() {
        let lines = vec![Line::new(0, 1, 0.1, 10.0)];
        assert!(matches!(
            compute_gsf(3, &lines, 0),
            Err(Error::Disconnected { bus: 2 })
        ));
    }

    #[test]
    fn bad_reactance_is_rejected() {
        let lines = vec![Line::new(0, 1, 0.0, 10.0)];
        assert!(compute_gsf(2, &lines, 0).is_err());
    }

    #[test]
    fn single_bus_has_empty_matrix() {
        assert!(compute_gsf(1, &[], 0).unwrap().is_empty());
    }
}
