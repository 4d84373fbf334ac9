//! Plain-text checkpoint format for a single [`SogpModel`].
//!
//! ```text
//! sogp-snapshot v1 d=6 m=45 n_added=812 policy=fs:15 capacity=45 eps_tol=... score=abs sigma_s2=... sigma_n2=... lengthscales=a,b,c,d,e,f
//! <m basis rows, d numbers each>
//! <one alpha row, m numbers; absent when m = 0>
//! <m rows of C>
//! <m rows of Q>
//! ```
//!
//! Numbers are whitespace separated and written with 18 significant digits,
//! which reproduces every `f64` exactly on reload.

use std::fmt::Write as _;
use std::path::Path;

use sogp_core::control::{GpBank, Normalizer};
use sogp_core::{DeletionPolicy, KernelParams, Matrix, ScoreRule, SogpConfig, SogpModel};

use crate::error::{BenchError, Result};

const MAGIC: &str = "sogp-snapshot";
const VERSION: &str = "v1";

fn bad(msg: impl Into<String>) -> BenchError {
    BenchError::Snapshot(msg.into())
}

fn push_row(out: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
    out.push_str(&cells.join(" "));
    out.push('\n');
}

fn policy_name(p: DeletionPolicy) -> String {
    match p {
        DeletionPolicy::Pis => "pis".into(),
        DeletionPolicy::Ops => "ops".into(),
        DeletionPolicy::Fs { h } => format!("fs:{h}"),
    }
}

fn parse_policy(s: &str) -> Result<DeletionPolicy> {
    match s {
        "pis" => Ok(DeletionPolicy::Pis),
        "ops" => Ok(DeletionPolicy::Ops),
        _ => {
            let h = s
                .strip_prefix("fs:")
                .and_then(|h| h.parse().ok())
                .ok_or_else(|| bad(format!("unknown policy `{s}`")))?;
            Ok(DeletionPolicy::Fs { h })
        }
    }
}

pub fn to_text(model: &SogpModel) -> String {
    let p = model.params();
    let cfg = model.config();
    let ls: Vec<String> = p.lengthscale_diag.iter().map(|x| format!("{x:.17e}")).collect();
    let score = match cfg.score {
        ScoreRule::Magnitude => "abs",
        ScoreRule::Signed => "signed",
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {VERSION} d={} m={} n_added={} policy={} capacity={} eps_tol={:.17e} score={score} \
         sigma_s2={:.17e} sigma_n2={:.17e} lengthscales={}",
        model.dim(),
        model.len(),
        model.n_added(),
        policy_name(cfg.policy),
        cfg.capacity,
        cfg.eps_tol,
        p.sigma_s2,
        p.sigma_n2,
        ls.join(","),
    );
    for row in model.basis().row_iter() {
        push_row(&mut out, row);
    }
    if !model.is_empty() {
        push_row(&mut out, model.alpha());
    }
    for row in model.covariance_correction().row_iter() {
        push_row(&mut out, row);
    }
    for row in model.inverse_gram().row_iter() {
        push_row(&mut out, row);
    }
    out
}

fn parse_row(line: Option<&str>, expected: usize, what: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| bad(format!("truncated before {what}")))?;
    let row: Vec<f64> = line
        .split_whitespace()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("bad number `{v}` in {what}")))
        })
        .collect::<Result<_>>()?;
    if row.len() != expected {
        return Err(bad(format!(
            "{what}: expected {expected} values, got {}",
            row.len()
        )));
    }
    Ok(row)
}

fn parse_matrix<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        data.extend(parse_row(lines.next(), cols, what)?);
    }
    Ok(Matrix::from_row_major(rows, cols, data)?)
}

pub fn from_text(text: &str) -> Result<SogpModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty snapshot"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(bad("missing `sogp-snapshot` header"));
    }
    if tokens.next() != Some(VERSION) {
        return Err(bad("unsupported snapshot version"));
    }
    let mut field = |name: &str| -> Result<String> {
        let tok = tokens
            .next()
            .ok_or_else(|| bad(format!("header is missing `{name}`")))?;
        tok.strip_prefix(name)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| bad(format!("expected `{name}=`, found `{tok}`")))
    };
    fn num<T: std::str::FromStr>(name: &str, v: String) -> Result<T> {
        v.parse()
            .map_err(|_| bad(format!("bad value for `{name}`: `{v}`")))
    }
    let d: usize = num("d", field("d")?)?;
    let m: usize = num("m", field("m")?)?;
    let n_added: u64 = num("n_added", field("n_added")?)?;
    let policy = parse_policy(&field("policy")?)?;
    let capacity: usize = num("capacity", field("capacity")?)?;
    let eps_tol: f64 = num("eps_tol", field("eps_tol")?)?;
    let score = match field("score")?.as_str() {
        "abs" => ScoreRule::Magnitude,
        "signed" => ScoreRule::Signed,
        other => return Err(bad(format!("unknown score rule `{other}`"))),
    };
    let sigma_s2: f64 = num("sigma_s2", field("sigma_s2")?)?;
    let sigma_n2: f64 = num("sigma_n2", field("sigma_n2")?)?;
    let lengthscales = field("lengthscales")?
        .split(',')
        .map(|v| num("lengthscales", v.to_string()))
        .collect::<Result<Vec<f64>>>()?;
    if lengthscales.len() != d {
        return Err(bad("lengthscale count does not match d"));
    }

    let params = KernelParams::new(sigma_s2, sigma_n2, lengthscales)?;
    let config = SogpConfig {
        capacity,
        eps_tol,
        policy,
        score,
    };
    let bv = parse_matrix(&mut lines, m, d, "basis")?;
    let alpha = if m == 0 {
        Vec::new()
    } else {
        parse_row(lines.next(), m, "alpha")?
    };
    let c = parse_matrix(&mut lines, m, m, "C")?;
    let q = parse_matrix(&mut lines, m, m, "Q")?;
    if lines.next().is_some() {
        return Err(bad("trailing data after Q"));
    }
    Ok(SogpModel::from_parts(params, config, bv, alpha, c, q, n_added)?)
}

pub fn save_model(model: &SogpModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(model)).map_err(|e| BenchError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SogpModel> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    from_text(&text)
}

const NORMALIZER_FILE: &str = "normalizer.txt";

fn joint_file(j: usize) -> String {
    format!("joint{}.sogp", j + 1)
}

/// Writes `joint<i>.sogp` for every joint plus `normalizer.txt`
/// (one `mean scale` line per joint) into `dir`.
pub fn save_bank(bank: &GpBank, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    for (j, m) in bank.models().iter().enumerate() {
        save_model(m, &dir.join(joint_file(j)))?;
    }
    let mut text = String::new();
    for z in bank.normalizers() {
        let _ = writeln!(text, "{:.17e} {:.17e}", z.mean, z.scale);
    }
    let path = dir.join(NORMALIZER_FILE);
    std::fs::write(&path, text).map_err(|e| BenchError::io(path, e))
}

pub fn load_bank(dir: &Path) -> Result<GpBank> {
    let path = dir.join(NORMALIZER_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    let normalizers = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v = parse_row(Some(l), 2, "normalizer")?;
            Ok(Normalizer {
                mean: v[0],
                scale: v[1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let models = (0..normalizers.len())
        .map(|j| load_model(&dir.join(joint_file(j))))
        .collect::<Result<Vec<_>>>()?;
    Ok(GpBank::from_models(models, normalizers)?)
}
