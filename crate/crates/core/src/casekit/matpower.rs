use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Generator, Line, Network, QuadraticCost};

/// Bus, branch and generator data read from a MATPOWER case file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatpowerCase {
    pub base_mva: f64,
    /// External bus numbers in file order; index `i` is bus `i` of the network.
    pub bus_numbers: Vec<u32>,
    /// MATPOWER bus types (1 = PQ, 2 = PV, 3 = reference).
    pub bus_types: Vec<u8>,
    /// Nominal real demand per bus, MW.
    pub demand: Vec<f64>,
    pub network: Network,
    /// In-service generators with their limits; costs are left at zero.
    pub generators: Vec<Generator>,
}

impl MatpowerCase {
    /// Indices of load (PQ) buses.
    pub fn pq_buses(&self) -> Vec<usize> {
        (0..self.bus_types.len())
            .filter(|&i| self.bus_types[i] == 1)
            .collect()
    }
}

struct Matrix {
    start_line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

/// Reads the `mpc.bus`, `mpc.branch` and `mpc.gen` matrices of a MATPOWER
/// case. Branch `rateA` becomes the symmetric flow limit (0 means
/// unlimited); out-of-service branches and generators are skipped.
pub fn parse_matpower_subset(text: &str) -> Result<MatpowerCase> {
    let mut base_mva = 100.0;
    let mut matrices: HashMap<String, Matrix> = HashMap::new();
    let mut open: Option<(String, Matrix)> = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((name, mut matrix)) = open.take() {
            let (body, closed) = match line.find(']') {
                Some(p) => (&line[..p], true),
                None => (line, false),
            };
            for row in body.split(';') {
                let row = row.trim();
                if row.is_empty() {
                    continue;
                }
                let values = row
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>().map_err(|_| Error::Matpower {
                            line: line_no,
                            message: format!("not a number: {tok:?}"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                matrix.rows.push((line_no, values));
            }
            if closed {
                matrices.insert(name, matrix);
            } else {
                open = Some((name, matrix));
            }
            continue;
        }
        let Some(rest) = line.strip_prefix("mpc.") else {
            continue;
        };
        let Some((name, value)) = rest.split_once('=') else {
            continue;
        };
        let name = name.trim().to_string();
        let value = value.trim().trim_end_matches(';').trim();
        if name == "baseMVA" {
            base_mva = value.parse().map_err(|_| Error::Matpower {
                line: line_no,
                message: format!("baseMVA is not a number: {value:?}"),
            })?;
        } else if let Some(inline) = value.strip_prefix('[') {
            let matrix = Matrix {
                start_line: line_no,
                rows: Vec::new(),
            };
            if inline.trim().is_empty() {
                open = Some((name, matrix));
            } else {
                return Err(Error::Matpower {
                    line: line_no,
                    message: "matrix rows must start on the line after '['".into(),
                });
            }
        }
    }
    if let Some((name, matrix)) = open {
        return Err(Error::Matpower {
            line: matrix.start_line,
            message: format!("mpc.{name} is never closed"),
        });
    }

    let take = |name: &str, min_cols: usize, m: &mut HashMap<String, Matrix>| -> Result<Matrix> {
        let matrix = m.remove(name).ok_or_else(|| Error::Matpower {
            line: 0,
            message: format!("missing mpc.{name}"),
        })?;
        for (line, row) in &matrix.rows {
            if row.len() < min_cols {
                return Err(Error::Matpower {
                    line: *line,
                    message: format!(
                        "mpc.{name} row needs at least {min_cols} columns, found {}",
                        row.len()
                    ),
                });
            }
        }
        Ok(matrix)
    };
    let bus = take("bus", 3, &mut matrices)?;
    let branch = take("branch", 11, &mut matrices)?;
    let gen = take("gen", 10, &mut matrices)?;

    let mut index_of = HashMap::new();
    let mut bus_numbers = Vec::new();
    let mut bus_types = Vec::new();
    let mut demand = Vec::new();
    let mut slack = None;
    for (line, row) in &bus.rows {
        let number = as_bus_number(row[0], *line)?;
        if index_of.insert(number, bus_numbers.len()).is_some() {
            return Err(Error::Matpower {
                line: *line,
                message: format!("bus {number} defined twice"),
            });
        }
        let kind = row[1] as u8;
        if kind == 3 {
            if slack.is_some() {
                return Err(Error::Matpower {
                    line: *line,
                    message: "more than one reference bus".into(),
                });
            }
            slack = Some(bus_numbers.len());
        }
        bus_numbers.push(number);
        bus_types.push(kind);
        demand.push(row[2]);
    }
    let slack = slack.ok_or_else(|| Error::Matpower {
        line: bus.start_line,
        message: "no reference bus (type 3)".into(),
    })?;
    let lookup = |value: f64, line: usize| -> Result<usize> {
        let number = as_bus_number(value, line)?;
        index_of
            .get(&number)
            .copied()
            .ok_or_else(|| Error::Matpower {
                line,
                message: format!("unknown bus {number}"),
            })
    };

    let mut lines = Vec::new();
    for (line, row) in &branch.rows {
        if row[10] == 0.0 {
            continue;
        }
        let from = lookup(row[0], *line)?;
        let to = lookup(row[1], *line)?;
        let reactance = row[3];
        if !(reactance > 0.0) {
            return Err(Error::Matpower {
                line: *line,
                message: format!("branch reactance must be positive, got {reactance}"),
            });
        }
        let limit = if row[5] > 0.0 { row[5] } else { f64::INFINITY };
        lines.push(Line::new(from, to, reactance, limit));
    }

    let mut generators = Vec::new();
    for (line, row) in &gen.rows {
        if row[7] <= 0.0 {
            continue;
        }
        generators.push(Generator {
            bus: lookup(row[0], *line)?,
            p_min: row[9].max(0.0),
            p_max: row[8],
            ramp_up: None,
            ramp_down: None,
            cost: QuadraticCost::ZERO,
            p_max_profile: None,
        });
    }

    let network = Network::new(bus_numbers.len(), lines, slack)?;
    Ok(MatpowerCase {
        base_mva,
        bus_numbers,
        bus_types,
        demand,
        network,
        generators,
    })
}

fn as_bus_number(value: f64, line: usize) -> Result<u32> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(Error::Matpower {
            line,
            message: format!("bus number must be a positive integer, got {value}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "function mpc = toy
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	135	1	1.05	0.95;
	2	1	50	0	0	0	1	1	0	135	1	1.05	0.95;
];
mpc.gen = [
	1	0	0	10	-10	1	100	1	80	0;
];
mpc.branch = [
	1	2	0.01	0.1	0	30	0	0	0	0	1	-360	360;
];
";

    #[test]
    fn two_bus_toy_has_one_line() {
        let case = parse_matpower_subset(TOY).unwrap();
        assert_eq!(case.network.n_buses, 2);
        assert_eq!(case.network.lines.len(), 1);
        assert_eq!(case.network.lines[0].flow_max, 30.0);
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.generators[0].p_max, 80.0);
        assert_eq!(case.demand, vec![0.0, 50.0]);
        assert_eq!(case.pq_buses(), vec![1]);
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let text = TOY.replace("2	1	50", "2	1	5x0");
        match parse_matpower_subset(&text) {
            Err(Error::Matpower { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_branch_bus_is_rejected() {
        let text = TOY.replace("1	2	0.01", "1	7	0.01");
        match parse_matpower_subset(&text) {
            Err(Error::Matpower { line, message }) => {
                assert_eq!(line, 11);
                assert!(message.contains("unknown bus 7"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rating_means_unlimited() {
        let text = TOY.replace("0.1	0	30", "0.1	0	0");
        let case = parse_matpower_subset(&text).unwrap();
        assert!(case.network.lines[0].flow_max.is_infinite());
    }

    #[test]
    fn missing_branch_matrix() {
        let text = TOY.split("mpc.branch").next().unwrap();
        assert!(parse_matpower_subset(text).is_err());
    }
}
