use std::fmt::Write as _;
use std::path::Path;

use super::{Nonlinearity, Profile, ProfileError};
use crate::io_util::atomic_write;

pub const CACHE_VERSION: u32 = 1;

/// Cache file name keyed by (N, p, tol).
pub fn cache_file_name(n: usize, p: f64, tol: f64) -> String {
    format!("profile_N{n}_p{p}_tol{tol:e}.csv")
}

pub fn write_profile(path: &Path, pr: &Profile) -> Result<(), ProfileError> {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# spike-cluster profile v{CACHE_VERSION}, {}, {}, {}, {}, {}",
        pr.dim, pr.nl.p, pr.w0, pr.tail_amplitude, pr.r_star
    );
    for k in 0..pr.w.len() {
        let _ = writeln!(s, "{},{},{}", pr.r[k], pr.w[k], pr.wp[k]);
    }
    atomic_write(path, s.as_bytes())?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> ProfileError {
    ProfileError::Cache(msg.into())
}

pub fn read_profile(path: &Path, tol: f64) -> Result<Profile, ProfileError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let rest = header
        .strip_prefix(&format!("# spike-cluster profile v{CACHE_VERSION}, "))
        .ok_or_else(|| bad(format!("unrecognized header {header:?}")))?;
    let fields: Vec<&str> = rest.split(", ").collect();
    if fields.len() != 5 {
        return Err(bad("header needs dim, p, w0, A, r_star"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let dim = fields[0].trim().parse::<usize>().map_err(|e| bad(e.to_string()))?;
    let p = num(fields[1])?;
    let w0 = num(fields[2])?;
    let tail_amplitude = num(fields[3])?;
    let r_star = num(fields[4])?;
    let (mut r, mut w, mut wp) = (Vec::new(), Vec::new(), Vec::new());
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(format!("bad row {line:?}")));
        }
        r.push(num(cols[0])?);
        w.push(num(cols[1])?);
        wp.push(num(cols[2])?);
    }
    if r.len() < 4 {
        return Err(bad("too few rows"));
    }
    let h = r[1];
    if r.iter().enumerate().any(|(k, &rk)| rk != k as f64 * h) {
        return Err(bad("rows are not on the uniform node grid"));
    }
    if r[r.len() - 1] != r_star || w[0] != w0 {
        return Err(bad("header inconsistent with rows"));
    }
    Ok(Profile { dim, nl: Nonlinearity::new(p), w0, h, r, w, wp, tail_amplitude, r_star, tol })
}
