//! Text file formats: snapshot files and tab-separated analysis tables.
//!
//! A snapshot file is a block of `# key value` header lines followed by one
//! `x<TAB>v` line per particle in rank order. Values are written with 17
//! significant digits, which reproduces every binary64 value exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{preset, ModelKind, ModelParams, Snapshot};

pub const SNAPSHOT_TAG: &str = "ogs-snapshot v1";

const HEADER_KEYS: [&str; 9] = ["model", "gamma", "beta", "box_length", "n", "periodic", "tau", "seed", "provenance"];

pub fn write_snapshot<W: Write>(snapshot: &Snapshot, mut out: W) -> Result<()> {
    let m = &snapshot.model;
    writeln!(out, "# {SNAPSHOT_TAG}")?;
    writeln!(out, "# model {}", m.kind)?;
    writeln!(out, "# gamma {:.16e}", m.gamma)?;
    writeln!(out, "# beta {:.16e}", m.beta)?;
    writeln!(out, "# box_length {:.16e}", m.box_length)?;
    writeln!(out, "# n {}", m.n_particles)?;
    writeln!(out, "# periodic {}", m.periodic)?;
    writeln!(out, "# tau {:.16e}", snapshot.tau)?;
    writeln!(out, "# seed {}", snapshot.seed)?;
    writeln!(out, "# provenance {}", snapshot.provenance.replace('\n', " "))?;
    for (x, v) in snapshot.positions.iter().zip(&snapshot.velocities) {
        writeln!(out, "{x:.16e}\t{v:.16e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_snapshot(snapshot: &Snapshot, path: &Path) -> Result<()> {
    write_snapshot(snapshot, BufWriter::new(File::create(path)?))
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    read_snapshot(BufReader::new(File::open(path)?))
}

fn parse_num<T: std::str::FromStr>(field: &str, text: &str, line: usize) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::format(format!("line {line}: cannot parse {field} from '{}'", text.trim())))
}

/// Parse a snapshot file and rebuild its model from the header.
pub fn read_snapshot<R: BufRead>(input: R) -> Result<Snapshot> {
    let mut header: Vec<Option<String>> = vec![None; HEADER_KEYS.len()];
    let mut positions = Vec::new();
    let mut velocities = Vec::new();
    let mut tagged = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if !tagged {
                if rest != SNAPSHOT_TAG {
                    return Err(Error::format(format!("line {lineno}: expected '# {SNAPSHOT_TAG}'")));
                }
                tagged = true;
                continue;
            }
            let (key, value) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            if let Some(k) = HEADER_KEYS.iter().position(|&h| h == key) {
                header[k] = Some(value.trim().to_string());
            }
            continue;
        }
        if !tagged {
            return Err(Error::format(format!("missing '# {SNAPSHOT_TAG}' header")));
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(x), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::format(format!("line {lineno}: expected two tab-separated values")));
        };
        positions.push(parse_num::<f64>("x", x, lineno)?);
        velocities.push(parse_num::<f64>("v", v, lineno)?);
    }
    if !tagged {
        return Err(Error::format("empty snapshot file"));
    }
    let get = |k: usize| {
        header[k].as_deref().ok_or_else(|| Error::format(format!("missing header field '{}'", HEADER_KEYS[k])))
    };
    let kind: ModelKind = get(0)?.parse().map_err(|e: Error| Error::format(e.to_string()))?;
    let gamma: f64 = parse_num("gamma", get(1)?, 0)?;
    let beta: f64 = parse_num("beta", get(2)?, 0)?;
    let box_length: f64 = parse_num("box_length", get(3)?, 0)?;
    let n: usize = parse_num("n", get(4)?, 0)?;
    let periodic: bool = parse_num("periodic", get(5)?, 0)?;
    let tau: f64 = parse_num("tau", get(6)?, 0)?;
    let seed: u64 = parse_num("seed", get(7)?, 0)?;
    let provenance = get(8)?.to_string();
    let bad = |e: Error| Error::format(e.to_string());
    let model = match kind {
        ModelKind::Custom => ModelParams::custom(gamma, beta, n, box_length, periodic).map_err(bad)?,
        named => {
            let m = preset(named, n, box_length).map_err(bad)?;
            if m.gamma != gamma || m.beta != beta {
                return Err(Error::format(format!(
                    "header coefficients gamma={gamma}, beta={beta} do not match the {named} model"
                )));
            }
            m.with_periodic(periodic)
        }
    };
    Snapshot::new(tau, positions, velocities, model, seed, provenance).map_err(bad)
}

/// Numeric table with named columns. Missing values are NaN and are
/// written as `nan`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl AnalysisTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        AnalysisTable { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::format(format!("row has {} values for {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.columns.join("\t"))?;
        for row in &self.rows {
            let cells: Vec<String> =
                row.iter().map(|v| if v.is_nan() { "nan".to_string() } else { format!("{v:e}") }).collect();
            writeln!(out, "{}", cells.join("\t"))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let columns: Vec<String> = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let Some(head) = line.strip_prefix('#') else {
                        return Err(Error::format("table must start with a '#' column header"));
                    };
                    break head.trim().split('\t').map(|c| c.trim().to_string()).collect();
                }
                None => return Err(Error::format("empty table")),
            }
        };
        if columns.iter().any(String::is_empty) {
            return Err(Error::format("empty column name in table header"));
        }
        let mut table = AnalysisTable { columns, rows: Vec::new() };
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split('\t')
                .map(|cell| parse_num::<f64>("value", cell, i + 1))
                .collect::<Result<Vec<f64>>>()?;
            table.push(row).map_err(|e| Error::format(format!("line {}: {e}", i + 1)))?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset;
    use proptest::prelude::*;

    fn sample(positions: Vec<f64>, velocities: Vec<f64>) -> Snapshot {
        let model = preset(ModelKind::Quintic, positions.len(), 8.0).unwrap();
        Snapshot::new(1.25, positions, velocities, model, 7, "ic=waterbag vparam=0.5 rng=chacha8 seed=7").unwrap()
    }

    fn round_trip(s: &Snapshot) -> Snapshot {
        let mut buf = Vec::new();
        write_snapshot(s, &mut buf).unwrap();
        read_snapshot(buf.as_slice()).unwrap()
    }

    #[test]
    fn header_layout() {
        let s = sample(vec![-1.0, 0.5], vec![0.1, -0.0]);
        let mut buf = Vec::new();
        write_snapshot(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# ogs-snapshot v1"));
        assert_eq!(lines.next(), Some("# model quintic"));
        assert!(text.contains("# n 2\n# periodic true\n"));
        assert!(text.ends_with("5.0000000000000000e-1\t-0.0000000000000000e0\n"));
    }

    #[test]
    fn custom_model_round_trips() {
        let model = ModelParams::custom(0.3, 1.0, 3, 6.0, false).unwrap();
        let s = Snapshot::new(0.0, vec![-1.0, 0.0, 1.0], vec![0.0; 3], model, 1, "test").unwrap();
        assert_eq!(round_trip(&s), s);
    }

    #[test]
    fn malformed_input_is_rejected() {
        for text in [
            "",
            "0.1\t0.2\n",
            "# something else\n",
            "# ogs-snapshot v1\n# model quintic\n0.1\t0.2\n",
            "# ogs-snapshot v1\n# model quintic\n# gamma 1\n# beta 1\n# box_length 8\n# n 2\n# periodic true\n# tau 0\n# seed 1\n# provenance p\n0\t0\n1\t0\n",
            "# ogs-snapshot v1\n# model quintic\n# gamma 4.0824829046386302e-1\n# beta 1\n# box_length 8\n# n 2\n# periodic true\n# tau 0\n# seed 1\n# provenance p\n0\t0\n1\tx\n",
            "# ogs-snapshot v1\n# model quintic\n# gamma 4.0824829046386302e-1\n# beta 1\n# box_length 8\n# n 3\n# periodic true\n# tau 0\n# seed 1\n# provenance p\n0\t0\n1\t0\n",
        ] {
            assert!(matches!(read_snapshot(text.as_bytes()), Err(Error::Format(_))), "{text:?}");
        }
    }

    #[test]
    fn tables_round_trip() {
        let mut t = AnalysisTable::new(["q", "D_q"]);
        t.push(vec![0.0, 1.0]).unwrap();
        t.push(vec![2.5, f64::NAN]).unwrap();
        t.push(vec![-1e-300, 0.1 + 0.2]).unwrap();
        assert!(t.push(vec![1.0]).is_err());
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = AnalysisTable::read(buf.as_slice()).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.rows[0], t.rows[0]);
        assert!(back.rows[1][1].is_nan());
        assert_eq!(back.rows[2], t.rows[2]);
        assert_eq!(back.column("q").unwrap(), vec![0.0, 2.5, -1e-300]);
        assert!(AnalysisTable::read("1\t2\n".as_bytes()).is_err());
        assert!(AnalysisTable::read("# a\tb\n1\t2\t3\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn snapshot_round_trip_is_bitwise(
            raw in prop::collection::vec((-4.0f64..4.0, any::<f64>().prop_filter("finite", |v| v.is_finite())), 2..64),
        ) {
            let mut xs: Vec<f64> = raw.iter().map(|r| r.0).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            prop_assume!(xs.len() >= 2);
            let vs: Vec<f64> = raw.iter().take(xs.len()).map(|r| r.1).collect();
            let s = sample(xs, vs);
            let back = round_trip(&s);
            for (a, b) in s.positions.iter().zip(&back.positions).chain(s.velocities.iter().zip(&back.velocities)) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back, s);
        }
    }
}
