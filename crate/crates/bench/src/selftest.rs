//! Quick invariant checks run by `sogp-bench selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sogp_core::armsim::{self, ArmParams, ArmState};
use sogp_core::gp_oracle::BatchGp;
use sogp_core::kernel::gram_matrix;
use sogp_core::linalg::Cholesky;
use sogp_core::{DeletionPolicy, KernelParams, Matrix, SogpConfig, SogpModel};

use crate::snapshot;

pub struct GroupResult {
    pub name: &'static str,
    /// `Err` holds a one-line reason.
    pub outcome: Result<(), String>,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, spread: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-spread..spread)).collect()
}

fn params(d: usize) -> KernelParams {
    KernelParams::new(1.0, 0.04, vec![0.5; d]).expect("valid kernel")
}

fn exact_gp(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let d = 3;
    let n = 20;
    let p = params(d);
    let mut model =
        SogpModel::new(p.clone(), SogpConfig::new(n, 0.0, DeletionPolicy::Pis)).map_err(|e| e.to_string())?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..n {
        let x = random_point(rng, d, 2.0);
        let y = x.iter().map(|v| v.sin()).sum::<f64>();
        model.update(&x, y).map_err(|e| e.to_string())?;
        xs.push(x);
        ys.push(y);
    }
    let oracle = BatchGp::fit(&p, &Matrix::from_rows(&xs).unwrap(), &ys).map_err(|e| e.to_string())?;
    for _ in 0..20 {
        let x = random_point(rng, d, 2.5);
        let (m1, v1) = model.predict(&x).map_err(|e| e.to_string())?;
        let (m2, v2) = oracle.predict(&x).map_err(|e| e.to_string())?;
        check((m1 - m2).abs() <= 1e-8 && (v1 - v2).abs() <= 1e-8, || {
            format!("SOGP ({m1}, {v1}) vs batch GP ({m2}, {v2})")
        })?;
    }
    Ok(())
}

fn inverse_gram(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let d = 4;
    let mut model = SogpModel::new(params(d), SogpConfig::new(15, 0.01, DeletionPolicy::Fs { h: 5 }))
        .map_err(|e| e.to_string())?;
    for i in 0..400 {
        let x = random_point(rng, d, 1.5);
        model.update(&x, x[0].cos()).map_err(|e| e.to_string())?;
        if i % 20 == 0 {
            let r = model.inverse_gram_residual();
            check(r <= 1e-8, || format!("residual {r:e} after {i} updates"))?;
        }
    }
    check(model.len() <= 15, || "capacity exceeded".into())
}

fn deletion_algebra(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let d = 3;
    for trial in 0..20 {
        let mut model = SogpModel::new(params(d), SogpConfig::new(30, 0.0, DeletionPolicy::Pis))
            .map_err(|e| e.to_string())?;
        let size = rng.random_range(5..=20);
        while model.len() < size {
            let x = random_point(rng, d, 3.0);
            model.update(&x, x[1]).map_err(|e| e.to_string())?;
        }
        let i = rng.random_range(0..size);
        model.delete_index(i).map_err(|e| e.to_string())?;
        let k = gram_matrix(model.params(), model.basis()).map_err(|e| e.to_string())?;
        let chol = Cholesky::factor(&k).map_err(|e| e.to_string())?;
        let m = model.len();
        for j in 0..m {
            let mut ej = vec![0.0; m];
            ej[j] = 1.0;
            let col = chol.solve(&ej);
            for (r, v) in col.iter().enumerate() {
                let diff = (model.inverse_gram()[(r, j)] - v).abs();
                check(diff <= 1e-8, || format!("trial {trial}: Q differs by {diff:e}"))?;
            }
        }
    }
    Ok(())
}

fn policy_limits(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let d = 3;
    let make = |policy| SogpModel::new(params(d), SogpConfig::new(8, 0.01, policy)).unwrap();
    let pairs = [
        (DeletionPolicy::Fs { h: 1 }, DeletionPolicy::Ops),
        (DeletionPolicy::Fs { h: 1_000_000_000 }, DeletionPolicy::Pis),
    ];
    let stream: Vec<Vec<f64>> = (0..200).map(|_| random_point(rng, d, 2.0)).collect();
    for (a, b) in pairs {
        let (mut ma, mut mb) = (make(a), make(b));
        for x in &stream {
            let ra = ma.update(x, x[2]).map_err(|e| e.to_string())?;
            let rb = mb.update(x, x[2]).map_err(|e| e.to_string())?;
            let (ia, ib) = (ra.deleted.map(|d| d.index), rb.deleted.map(|d| d.index));
            check(ia == ib, || format!("{a:?} deleted {ia:?}, {b:?} deleted {ib:?}"))?;
        }
        let probe = random_point(rng, d, 2.0);
        let (pa, pb) = (ma.predict(&probe).unwrap(), mb.predict(&probe).unwrap());
        check(
            (pa.0 - pb.0).abs() <= 1e-12 && (pa.1 - pb.1).abs() <= 1e-12,
            || format!("{a:?} and {b:?} predictions differ"),
        )?;
    }
    Ok(())
}

fn dynamics(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let p = ArmParams::default();
    for _ in 0..100 {
        let q = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let qd = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let qdd = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
        let tau = armsim::inverse_dynamics(&p, &q, &qd, &qdd);
        let back = armsim::forward_dynamics(&p, &ArmState { q, qd, t: 0.0 }, &tau);
        let err = (back[0] - qdd[0]).abs().max((back[1] - qdd[1]).abs());
        check(err <= 1e-10, || {
            format!("forward/inverse round trip error {err:e}")
        })?;
    }
    let free = p.frictionless();
    let mut s = ArmState {
        q: [0.3, -0.4],
        qd: [1.0, -0.5],
        t: 0.0,
    };
    let e0 = armsim::mechanical_energy(&free, &s);
    for _ in 0..10_000 {
        s = armsim::step(&free, &s, &[0.0, 0.0], 1e-4).map_err(|e| e.to_string())?;
    }
    let drift = ((armsim::mechanical_energy(&free, &s) - e0) / e0).abs();
    check(drift < 1e-6, || format!("relative energy drift {drift:e}"))
}

fn snapshot_roundtrip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let d = 6;
    let mut model = SogpModel::new(params(d), SogpConfig::new(10, 0.01, DeletionPolicy::Fs { h: 3 }))
        .map_err(|e| e.to_string())?;
    for _ in 0..40 {
        let x = random_point(rng, d, 1.0);
        model.update(&x, x.iter().sum()).map_err(|e| e.to_string())?;
    }
    let back = snapshot::from_text(&snapshot::to_text(&model)).map_err(|e| e.to_string())?;
    for _ in 0..20 {
        let x = random_point(rng, d, 1.0);
        let (a, b) = (model.predict(&x).unwrap(), back.predict(&x).unwrap());
        check(a == b, || {
            format!("prediction changed after reload: {a:?} vs {b:?}")
        })?;
    }
    Ok(())
}

/// Runs every group with a fixed seed.
pub fn run_selftest() -> Vec<GroupResult> {
    let groups: [(&'static str, fn(&mut ChaCha8Rng) -> Result<(), String>); 6] = [
        ("exact-gp-equivalence", exact_gp),
        ("inverse-gram", inverse_gram),
        ("deletion-algebra", deletion_algebra),
        ("policy-limits", policy_limits),
        ("dynamics", dynamics),
        ("snapshot-roundtrip", snapshot_roundtrip),
    ];
    groups
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            GroupResult {
                name,
                outcome: f(&mut rng),
            }
        })
        .collect()
}
