//! Fixed-format MPS interchange for external cross-checks.
//!
//! Columns and rows get generated 8-character names (`C0000001`,
//! `R0000001`); numbers carry up to 12 significant digits, which can widen
//! a value field past the classic 12 characters for extreme exponents.
//! Round-trip through [`parse_mps`] preserves the model to 12 significant
//! digits; bit-exactness is not a goal.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numfmt::format_sig12;
use crate::optimizer::lp::{CanonicalLp, RowKind, Sense, VarKey};

fn row_name(i: usize) -> String {
    format!("R{:07}", i + 1)
}

fn col_name(j: usize) -> String {
    format!("C{:07}", j + 1)
}

fn pair(field: &mut String, name: &str, value: f64) {
    field.push_str(&format!("{:<8}  {:<12}", name, format_sig12(value)));
}

/// Serialize to fixed MPS (minimization, objective row `COST`).
pub fn write_mps(lp: &CanonicalLp, name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("NAME          {name}\n"));

    out.push_str("ROWS\n N  COST\n");
    for i in 0..lp.num_rows() {
        let tag = match lp.senses()[i] {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        out.push_str(&format!(" {}  {}\n", tag, row_name(i)));
    }

    // column-major entry map
    let mut by_col: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for &(row, col, coeff) in lp.entries() {
        by_col.entry(col as usize).or_default().push((row as usize, coeff));
    }
    out.push_str("COLUMNS\n");
    for j in 0..lp.num_vars() {
        let mut pairs: Vec<(String, f64)> = Vec::new();
        let c = lp.objective()[j];
        if c != 0.0 {
            pairs.push(("COST".to_string(), c));
        }
        if let Some(entries) = by_col.get_mut(&j) {
            entries.sort_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::new();
            for &(r, v) in entries.iter() {
                match merged.last_mut() {
                    Some((lr, lv)) if *lr == r => *lv += v,
                    _ => merged.push((r, v)),
                }
            }
            for (r, v) in merged {
                pairs.push((row_name(r), v));
            }
        }
        for chunk in pairs.chunks(2) {
            let mut line = format!("    {:<8}  ", col_name(j));
            for (name, value) in chunk {
                pair(&mut line, name, *value);
                line.push_str("   ");
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }

    out.push_str("RHS\n");
    let rhs_pairs: Vec<(String, f64)> = (0..lp.num_rows())
        .filter(|&i| lp.rhs()[i] != 0.0)
        .map(|i| (row_name(i), lp.rhs()[i]))
        .collect();
    for chunk in rhs_pairs.chunks(2) {
        let mut line = "    RHS       ".to_string();
        for (name, value) in chunk {
            pair(&mut line, name, *value);
            line.push_str("   ");
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }

    out.push_str("BOUNDS\n");
    for j in 0..lp.num_vars() {
        let (l, u) = lp.bounds(j as u32);
        let name = col_name(j);
        if l.is_finite() && l == u {
            out.push_str(&format!(" FX BND       {:<8}  {}\n", name, format_sig12(l)));
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            out.push_str(&format!(" FR BND       {:<8}\n", name));
            continue;
        }
        if l == f64::NEG_INFINITY {
            out.push_str(&format!(" MI BND       {:<8}\n", name));
        } else if l != 0.0 {
            out.push_str(&format!(" LO BND       {:<8}  {}\n", name, format_sig12(l)));
        }
        if u.is_finite() {
            out.push_str(&format!(" UP BND       {:<8}  {}\n", name, format_sig12(u)));
        }
    }

    out.push_str("ENDATA\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

/// Parse an MPS model back into a `CanonicalLp`. Columns are keyed
/// `VarKey::Aux(j)` in first-appearance order; rows keep their MPS names.
/// Accepts whitespace-separated ("free") field layout.
pub fn parse_mps(text: &str) -> Result<CanonicalLp> {
    let mut lp = CanonicalLp::new();
    let mut section = Section::None;
    let mut objective_row: Option<String> = None;
    let mut row_sense: BTreeMap<String, Sense> = BTreeMap::new();
    let mut row_order: Vec<String> = Vec::new();
    let mut col_index: BTreeMap<String, u32> = BTreeMap::new();
    // (row name -> terms) accumulated until we know all columns
    let mut row_terms: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
    let mut obj_terms: BTreeMap<u32, f64> = BTreeMap::new();
    let mut rhs: BTreeMap<String, f64> = BTreeMap::new();
    let mut bounds: BTreeMap<u32, (f64, f64)> = BTreeMap::new();

    let bad = |line_no: usize, msg: &str| -> Error {
        Error::MalformedLp(format!("MPS line {}: {msg}", line_no + 1))
    };

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ');
        let fields: Vec<&str> = line.split_whitespace().collect();
        if is_header {
            section = match fields[0] {
                "NAME" => section,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => {
                    return Err(bad(line_no, "RANGES section is not supported"));
                }
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(bad(line_no, &format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(bad(line_no, "expected `<sense> <row>`"));
                }
                let name = fields[1].to_string();
                match fields[0] {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(name);
                        }
                    }
                    "L" => {
                        row_sense.insert(name.clone(), Sense::Le);
                        row_order.push(name);
                    }
                    "G" => {
                        row_sense.insert(name.clone(), Sense::Ge);
                        row_order.push(name);
                    }
                    "E" => {
                        row_sense.insert(name.clone(), Sense::Eq);
                        row_order.push(name);
                    }
                    other => return Err(bad(line_no, &format!("unknown row sense `{other}`"))),
                }
            }
            Section::Columns => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(bad(line_no, "expected `<col> (<row> <value>)+`"));
                }
                let next_index = col_index.len() as u32;
                let col = *col_index.entry(fields[0].to_string()).or_insert(next_index);
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(line_no, &format!("bad number `{}`", pair[1])))?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        *obj_terms.entry(col).or_insert(0.0) += value;
                    } else if row_sense.contains_key(pair[0]) {
                        row_terms.entry(pair[0].to_string()).or_default().push((col, value));
                    } else {
                        return Err(bad(line_no, &format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if fields.len() < 3 || fields.len() % 2 == 0 {
                    return Err(bad(line_no, "expected `<rhs name> (<row> <value>)+`"));
                }
                for pair in fields[1..].chunks(2) {
                    let value: f64 = pair[1]
                        .parse()
                        .map_err(|_| bad(line_no, &format!("bad number `{}`", pair[1])))?;
                    rhs.insert(pair[0].to_string(), value);
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(bad(line_no, "expected `<type> <set> <col> [value]`"));
                }
                let col = *col_index
                    .get(fields[2])
                    .ok_or_else(|| bad(line_no, &format!("unknown column `{}`", fields[2])))?;
                let entry = bounds.entry(col).or_insert((0.0, f64::INFINITY));
                let value = || -> Result<f64> {
                    fields
                        .get(3)
                        .ok_or_else(|| bad(line_no, "missing bound value"))?
                        .parse()
                        .map_err(|_| bad(line_no, "bad bound value"))
                };
                match fields[0] {
                    "LO" => entry.0 = value()?,
                    "UP" => entry.1 = value()?,
                    "FX" => {
                        let v = value()?;
                        *entry = (v, v);
                    }
                    "FR" => *entry = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => entry.0 = f64::NEG_INFINITY,
                    "PL" => entry.1 = f64::INFINITY,
                    other => return Err(bad(line_no, &format!("unsupported bound `{other}`"))),
                }
            }
            Section::None | Section::Done => {
                return Err(bad(line_no, "data outside any section"));
            }
        }
    }

    // add_var must run in column order
    let mut ordered: Vec<(&String, &u32)> = col_index.iter().collect();
    ordered.sort_by_key(|&(_, &c)| c);
    for (_, &col) in ordered {
        let (l, u) = bounds.get(&col).copied().unwrap_or((0.0, f64::INFINITY));
        lp.add_var(VarKey::Aux(col), obj_terms.get(&col).copied().unwrap_or(0.0), l, u);
    }
    for name in row_order {
        let sense = row_sense[&name];
        let terms = row_terms.remove(&name).unwrap_or_default();
        let b = rhs.get(&name).copied().unwrap_or(0.0);
        lp.add_row(RowKind::Named(name), sense, b, terms);
    }
    lp.validate()?;
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::lp::solve_lp;
    use crate::optimizer::simplex::DenseSimplex;

    fn sample_lp() -> CanonicalLp {
        let mut lp = CanonicalLp::new();
        let a = lp.add_var(VarKey::Aux(0), 2.0, -1.0, 1.0);
        let b = lp.add_var(VarKey::Aux(1), 10.0, f64::NEG_INFINITY, 6.0);
        let c = lp.add_var(VarKey::Aux(2), 0.0, 0.0, f64::INFINITY);
        let d = lp.add_var(VarKey::Aux(3), 1.0, 0.125, 0.125);
        lp.add_row(RowKind::Named("r1".into()), Sense::Ge, 5.0, [(a, 2.5), (b, 3.5)]);
        lp.add_row(RowKind::Named("r2".into()), Sense::Le, 1.0, [(a, 4.5), (b, 2.5)]);
        lp.add_row(
            RowKind::Named("r3".into()),
            Sense::Eq,
            -2.0,
            [(c, -1.0), (d, -3.0), (a, 0.123456789012345)],
        );
        lp
    }

    #[test]
    fn round_trip_preserves_structure_and_optimum() {
        let lp = sample_lp();
        let text = write_mps(&lp, "SAMPLE");
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.num_vars(), lp.num_vars());
        assert_eq!(back.num_rows(), lp.num_rows());
        for j in 0..lp.num_vars() {
            let (l1, u1) = lp.bounds(j as u32);
            let (l2, u2) = back.bounds(j as u32);
            for (x, y) in [(l1, l2), (u1, u2)] {
                if x.is_finite() {
                    let rel = if x == 0.0 { y.abs() } else { ((y - x) / x).abs() };
                    assert!(rel < 1e-11, "bound {x} vs {y}");
                } else {
                    assert_eq!(x, y);
                }
            }
        }
        let oracle = DenseSimplex::default();
        let a = solve_lp(&lp, &oracle).unwrap().optimal().unwrap().objective;
        let b = solve_lp(&back, &oracle).unwrap().optimal().unwrap().objective;
        assert!(((a - b) / a).abs() < 1e-10, "objectives {a} vs {b}");
    }

    #[test]
    fn parser_rejects_garbage() {
        assert!(parse_mps("ROWS\n Z  R1\n").is_err());
        assert!(parse_mps("COLUMNS\n    X  R1  1.0\n").is_err());
    }
}
