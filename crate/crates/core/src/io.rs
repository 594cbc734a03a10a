//! Text serialization: dense matrices as headerless CSV, tensors as
//! `i j k v` lines, small manifests as `key = value` files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::balancing::RomBundle;
use crate::error::{Error, Result};
use crate::gramians::TruncatedGramians;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::poddeim::SnapshotSet;
use crate::qbsys::QBSystem;
use crate::tensor3::SparseTensor3;

/// Shortest round-trip representation.
fn fmt_exact(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| fmt_exact(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for rec in r.records() {
        let rec = rec?;
        if *ncols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Parse(format!("{}: ragged row {}", path.display(), nrows + 1)));
        }
        for field in rec.iter() {
            data.push(field.parse::<f64>().map_err(|_| Error::Parse(format!("{}: bad number '{field}'", path.display())))?);
        }
        nrows += 1;
    }
    Ok(DenseMatrix::from_row_slice(nrows, ncols.unwrap_or(0), &data))
}

/// Parse `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_kv(&fs::read_to_string(path)?)
}

pub fn write_kv<K: AsRef<str>, V: AsRef<str>>(path: &Path, pairs: impl IntoIterator<Item = (K, V)>) -> Result<()> {
    let mut text = String::new();
    for (k, v) in pairs {
        text.push_str(&format!("{} = {}\n", k.as_ref(), v.as_ref()));
    }
    fs::write(path, text)?;
    Ok(())
}

fn kv_usize(kv: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    kv.get(key)
        .ok_or_else(|| Error::Parse(format!("manifest is missing '{key}'")))?
        .parse()
        .map_err(|_| Error::Parse(format!("manifest '{key}' is not a count")))
}

/// Write `A.csv`, `B.csv`, `C.csv`, `N<k>.csv`, `H.txt` and `manifest.txt`.
pub fn save_system(dir: &Path, sys: &QBSystem, n1: Option<usize>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix_csv(&dir.join("A.csv"), sys.a())?;
    write_matrix_csv(&dir.join("B.csv"), sys.b())?;
    write_matrix_csv(&dir.join("C.csv"), sys.c())?;
    for (k, nk) in sys.n().iter().enumerate() {
        write_matrix_csv(&dir.join(format!("N{}.csv", k + 1)), nk)?;
    }
    fs::write(dir.join("H.txt"), sys.h().to_text())?;
    let mut pairs = vec![
        ("N".to_string(), sys.dim().to_string()),
        ("m".to_string(), sys.inputs().to_string()),
        ("p".to_string(), sys.outputs().to_string()),
    ];
    if let Some(n1) = n1 {
        pairs.push(("n1".to_string(), n1.to_string()));
    }
    write_kv(&dir.join("manifest.txt"), pairs)
}

/// Inverse of [`save_system`]; returns the recorded `n1` if present.
pub fn load_system(dir: &Path) -> Result<(QBSystem, Option<usize>)> {
    let kv = read_kv(&dir.join("manifest.txt"))?;
    let (dim, m) = (kv_usize(&kv, "N")?, kv_usize(&kv, "m")?);
    let n1 = if kv.contains_key("n1") { Some(kv_usize(&kv, "n1")?) } else { None };
    let read_or_empty = |name: &str, rows: usize, cols: usize| -> Result<DenseMatrix> {
        let m = read_matrix_csv(&dir.join(name))?;
        // A zero-column matrix is written as an empty file.
        Ok(if m.is_empty() { DenseMatrix::zeros(rows, cols) } else { m })
    };
    let a = read_matrix_csv(&dir.join("A.csv"))?;
    let b = read_or_empty("B.csv", dim, m)?;
    let c = read_matrix_csv(&dir.join("C.csv"))?;
    let n = (1..=m).map(|k| read_matrix_csv(&dir.join(format!("N{k}.csv")))).collect::<Result<Vec<_>>>()?;
    let h = SparseTensor3::from_text(dim, &fs::read_to_string(dir.join("H.txt"))?)?;
    Ok((QBSystem::new(a, h, n, b, c)?, n1))
}

/// ROM directory: the reduced system plus `V.csv`, `W.csv`, `sigma.csv`.
pub fn save_rom_bundle(dir: &Path, bundle: &RomBundle) -> Result<()> {
    save_system(dir, &bundle.rom, None)?;
    write_matrix_csv(&dir.join("V.csv"), &bundle.v)?;
    write_matrix_csv(&dir.join("W.csv"), &bundle.w)?;
    write_matrix_csv(&dir.join("sigma.csv"), &DenseMatrix::from_column_slice(bundle.sigma.len(), 1, bundle.sigma.as_slice()))
}

pub fn load_rom_bundle(dir: &Path) -> Result<RomBundle> {
    let (rom, _) = load_system(dir)?;
    let sigma = read_matrix_csv(&dir.join("sigma.csv"))?;
    Ok(RomBundle {
        r: rom.dim(),
        v: read_matrix_csv(&dir.join("V.csv"))?,
        w: read_matrix_csv(&dir.join("W.csv"))?,
        sigma: DenseVector::from_column_slice(sigma.as_slice()),
        rom,
    })
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Snapshot matrix as CSV plus a `<file>.meta` sidecar.
pub fn save_snapshots(path: &Path, set: &SnapshotSet) -> Result<()> {
    write_matrix_csv(path, &set.states)?;
    let mut meta = set.meta.clone();
    meta.insert("snapshot_dt".into(), fmt_exact(set.snapshot_dt));
    write_kv(&sidecar(path), meta)
}

pub fn load_snapshots(path: &Path) -> Result<SnapshotSet> {
    let states = read_matrix_csv(path)?;
    let mut meta = read_kv(&sidecar(path))?;
    let dt = meta
        .remove("snapshot_dt")
        .ok_or_else(|| Error::Parse("snapshot sidecar is missing snapshot_dt".into()))?;
    let snapshot_dt = dt.parse().map_err(|_| Error::Parse(format!("bad snapshot_dt '{dt}'")))?;
    Ok(SnapshotSet { states, snapshot_dt, meta })
}

/// Dump every Gramian block for inspection.
pub fn write_gramian_blocks(dir: &Path, tg: &TruncatedGramians) -> Result<()> {
    fs::create_dir_all(dir)?;
    let lin = &tg.linear;
    let (c, o) = (&tg.controllability, &tg.observability);
    let blocks: [(&str, &DenseMatrix); 10] = [
        ("P11", &lin.p11),
        ("Q11", &lin.q11),
        ("Q12", &lin.q12),
        ("Q22_tilde", &lin.q22_tilde),
        ("Pt11", &c.pt11),
        ("Pt12", &c.pt12),
        ("Pt22", &c.pt22),
        ("Qh11", &o.qh11),
        ("Qh12", &o.qh12),
        ("Qh22", &o.qh22),
    ];
    for (name, m) in blocks {
        write_matrix_csv(&dir.join(format!("{name}.csv")), m)?;
    }
    write_kv(&dir.join("manifest.txt"), [("alpha", fmt_exact(tg.alpha))])
}
