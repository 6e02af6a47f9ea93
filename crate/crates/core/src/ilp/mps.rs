//! MPS export and import.
//!
//! Layout follows fixed MPS (sections, `MARKER` lines, `UP` bounds on
//! binaries) but coefficients are written in shortest round-trip
//! scientific notation, so fields are whitespace separated rather than
//! column aligned. The objective is negated: MPS readers minimize.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{ContinuousVar, IlpModel, Row};
use crate::error::{Error, Result};

const OBJ: &str = "obj";

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:e}")
    }
}

pub fn write_mps<W: Write>(model: &IlpModel, w: &mut W) -> Result<()> {
    model.validate()?;
    writeln!(w, "NAME          BKNAP")?;
    writeln!(w, "* objective negated: minimize -(c.d + c_z z)")?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  {OBJ}")?;
    for r in 0..model.rows.len() {
        writeln!(w, " L  r{r}")?;
    }
    for j in 0..model.precedence.len() {
        writeln!(w, " G  p{j}")?;
    }
    // column-major entries
    let n = model.binary_count;
    let mut cols: Vec<Vec<(String, f64)>> = vec![Vec::new(); n];
    for (r, row) in model.rows.iter().enumerate() {
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            cols[i].push((format!("r{r}"), v));
        }
    }
    for (j, &(i, k)) in model.precedence.iter().enumerate() {
        cols[k].push((format!("p{j}"), 1.0));
        cols[i].push((format!("p{j}"), -1.0));
    }
    writeln!(w, "COLUMNS")?;
    writeln!(w, "    MARKER                 'MARKER'                 'INTORG'")?;
    for (i, entries) in cols.iter().enumerate() {
        writeln!(w, "    d{i}  {OBJ}  {}", num(-model.objective[i]))?;
        for (name, v) in entries {
            writeln!(w, "    d{i}  {name}  {}", num(*v))?;
        }
    }
    writeln!(w, "    MARKER                 'MARKER'                 'INTEND'")?;
    if let Some(c) = model.continuous {
        writeln!(w, "    z  {OBJ}  {}", num(-c.objective))?;
        for (r, row) in model.rows.iter().enumerate() {
            if row.cont != 0.0 {
                writeln!(w, "    z  r{r}  {}", num(row.cont))?;
            }
        }
    }
    writeln!(w, "RHS")?;
    for (r, row) in model.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            writeln!(w, "    RHS  r{r}  {}", num(row.rhs))?;
        }
    }
    writeln!(w, "BOUNDS")?;
    for i in 0..n {
        writeln!(w, " UP BND  d{i}  1")?;
    }
    if let Some(c) = model.continuous {
        writeln!(w, " LO BND  z  {}", num(c.lower))?;
        writeln!(w, " UP BND  z  {}", num(c.upper))?;
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

pub fn export_mps(model: &IlpModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mps(model, &mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Sense {
    N,
    L,
    G,
}

/// Reads a file written by [`write_mps`] (or any MPS file of the same
/// shape: `L` rows, `G` precedence rows `d_k - d_i >= 0`, binaries between
/// integer markers and at most one continuous column).
pub fn parse_mps<R: BufRead>(reader: R) -> Result<IlpModel> {
    let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
    let mut section = String::new();
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_ix: HashMap<String, usize> = HashMap::new();
    let mut obj_row = None;
    let mut in_int = false;
    let mut col_ix: HashMap<String, usize> = HashMap::new();
    let mut col_int: Vec<bool> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut bounds: HashMap<usize, (f64, f64)> = HashMap::new();

    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let ln = ln + 1;
        if line.starts_with('*') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = f[0].to_string();
            if section == "ENDATA" {
                break;
            }
            continue;
        }
        let parse_num = |s: &str| s.parse::<f64>().map_err(|_| perr(ln, &format!("bad number {s}")));
        match section.as_str() {
            "ROWS" => {
                if f.len() != 2 {
                    return Err(perr(ln, "expected sense and name"));
                }
                let sense = match f[0] {
                    "N" => Sense::N,
                    "L" => Sense::L,
                    "G" => Sense::G,
                    s => return Err(perr(ln, &format!("unsupported row sense {s}"))),
                };
                if sense == Sense::N {
                    if obj_row.is_some() {
                        return Err(perr(ln, "more than one objective row"));
                    }
                    obj_row = Some(rows.len());
                }
                row_ix.insert(f[1].to_string(), rows.len());
                rows.push((f[1].to_string(), sense));
            }
            "COLUMNS" => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    in_int = f[2] == "'INTORG'";
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(perr(ln, "expected column, row, value"));
                }
                let c = *col_ix.entry(f[0].to_string()).or_insert_with(|| {
                    col_int.push(in_int);
                    entries.push(Vec::new());
                    col_int.len() - 1
                });
                for pair in f[1..].chunks(2) {
                    let r = *row_ix.get(pair[0]).ok_or_else(|| perr(ln, &format!("unknown row {}", pair[0])))?;
                    entries[c].push((r, parse_num(pair[1])?));
                }
            }
            "RHS" => {
                for pair in f[1..].chunks(2) {
                    if pair.len() != 2 {
                        return Err(perr(ln, "expected row, value"));
                    }
                    let r = *row_ix.get(pair[0]).ok_or_else(|| perr(ln, &format!("unknown row {}", pair[0])))?;
                    rhs.insert(r, parse_num(pair[1])?);
                }
            }
            "BOUNDS" => {
                if f.len() != 4 {
                    return Err(perr(ln, "expected type, set, column, value"));
                }
                let c = *col_ix.get(f[2]).ok_or_else(|| perr(ln, &format!("unknown column {}", f[2])))?;
                let v = parse_num(f[3])?;
                let b = bounds.entry(c).or_insert((0.0, f64::INFINITY));
                match f[0] {
                    "UP" => b.1 = v,
                    "LO" => b.0 = v,
                    s => return Err(perr(ln, &format!("unsupported bound type {s}"))),
                }
            }
            "NAME" => {}
            s => return Err(perr(ln, &format!("unsupported section {s}"))),
        }
    }

    let obj_row = obj_row.ok_or_else(|| perr(0, "no objective row"))?;
    let binaries: Vec<usize> = (0..col_int.len()).filter(|&c| col_int[c]).collect();
    let conts: Vec<usize> = (0..col_int.len()).filter(|&c| !col_int[c]).collect();
    if conts.len() > 1 {
        return Err(perr(0, "at most one continuous column is supported"));
    }
    let mut bin_pos = vec![usize::MAX; col_int.len()];
    for (k, &c) in binaries.iter().enumerate() {
        bin_pos[c] = k;
        let b = bounds.get(&c).copied().unwrap_or((0.0, f64::INFINITY));
        if b.0 != 0.0 || b.1 != 1.0 {
            return Err(perr(0, "integer columns must be binary"));
        }
    }
    let n = binaries.len();
    let mut objective = vec![0.0; n];
    let mut dense: Vec<(Vec<(usize, f64)>, f64)> = vec![(Vec::new(), 0.0); rows.len()];
    let mut cont_obj = 0.0;
    for (c, ents) in entries.iter().enumerate() {
        for &(r, v) in ents {
            if r == obj_row {
                if col_int[c] {
                    objective[bin_pos[c]] = -v;
                } else {
                    cont_obj = -v;
                }
            } else if col_int[c] {
                dense[r].0.push((bin_pos[c], v));
            } else {
                dense[r].1 = v;
            }
        }
    }
    let continuous = conts.first().map(|c| {
        let (lower, upper) = bounds.get(c).copied().unwrap_or((0.0, f64::INFINITY));
        ContinuousVar { objective: cont_obj, lower, upper }
    });
    let mut out_rows = Vec::new();
    let mut precedence = Vec::new();
    for (r, (_, sense)) in rows.iter().enumerate() {
        if r == obj_row {
            continue;
        }
        let (mut ents, cont) = std::mem::take(&mut dense[r]);
        ents.sort_by_key(|e| e.0);
        let b = rhs.get(&r).copied().unwrap_or(0.0);
        match sense {
            Sense::L => {
                let (idx, val) = ents.into_iter().unzip();
                out_rows.push(Row { idx, val, cont, rhs: b });
            }
            Sense::G => {
                let pair = match ents.as_slice() {
                    [(a, va), (b2, vb)] if cont == 0.0 && b == 0.0 => match (*va, *vb) {
                        (x, y) if x == 1.0 && y == -1.0 => Some((*b2, *a)),
                        (x, y) if x == -1.0 && y == 1.0 => Some((*a, *b2)),
                        _ => None,
                    },
                    _ => None,
                };
                match pair {
                    Some(p) => precedence.push(p),
                    None => {
                        let (idx, val): (Vec<usize>, Vec<f64>) = ents.into_iter().map(|(i, v)| (i, -v)).unzip();
                        out_rows.push(Row { idx, val, cont: -cont, rhs: -b });
                    }
                }
            }
            Sense::N => {}
        }
    }
    let model = IlpModel { binary_count: n, objective, continuous, rows: out_rows, precedence };
    model.validate()?;
    Ok(model)
}

pub fn read_mps(path: &Path) -> Result<IlpModel> {
    parse_mps(BufReader::new(File::open(path)?))
}
