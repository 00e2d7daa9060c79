//! Independent oracles shared by the integration and acceptance suites.
//! The oracles never call into the code paths they check.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Window mean by enumerating every index in `[n-k, n+k]` and skipping the
/// ones outside the sequence.
pub fn brute_force_thresholds(v: &[f64], k: usize) -> Vec<(f64, usize)> {
    let end = v.len() as i64 - 1;
    (0..v.len() as i64)
        .map(|n| {
            let mut sum = 0.0;
            let mut present = 0usize;
            let mut missing = 0usize;
            for i in (n - k as i64)..=(n + k as i64) {
                if i < 0 || i > end {
                    missing += 1;
                } else {
                    sum += v[i as usize];
                    present += 1;
                }
            }
            (sum / present as f64, missing)
        })
        .collect()
}

pub type M3 = [[f64; 3]; 3];

pub fn matmul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn rot_y(a: f64) -> M3 {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_z(a: f64) -> M3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation by `|r|` about `r / |r|`, built as `Rz(az) Ry(polar) Rz(θ)
/// Ry(-polar) Rz(-az)`: tip the axis onto z, spin, tip back.
pub fn composed_rotation(r: [f64; 3]) -> M3 {
    let theta = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if theta == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let axis = [r[0] / theta, r[1] / theta, r[2] / theta];
    let polar = axis[2].clamp(-1.0, 1.0).acos();
    let az = axis[1].atan2(axis[0]);
    let m = matmul(&rot_z(az), &rot_y(polar));
    let m = matmul(&m, &rot_z(theta));
    let m = matmul(&m, &rot_y(-polar));
    matmul(&m, &rot_z(-az))
}

/// Camera centre `-Rᵀ t` with the oracle rotation.
pub fn oracle_position(r: [f64; 3], t: [f64; 3]) -> [f64; 3] {
    let m = composed_rotation(r);
    let mut p = [0.0; 3];
    for (i, pi) in p.iter_mut().enumerate() {
        *pi = -(0..3).map(|k| m[k][i] * t[k]).sum::<f64>();
    }
    p
}

/// Peak RSS in KiB of a child process, from its `VmHWM` high-water mark.
///
/// `wait4`'s `ru_maxrss` is no use here: the child is spawned with vfork,
/// so the parent's high-water mark is folded in at exec. `VmHWM` only
/// grows, so polling it until exit loses nothing unless the peak lands in
/// the final poll interval.
#[cfg(target_os = "linux")]
pub fn run_measuring_rss(cmd: &mut std::process::Command) -> (i32, i64) {
    let mut child = cmd.spawn().expect("spawn");
    let status_path = format!("/proc/{}/status", child.id());
    let mut peak = 0;
    let status = loop {
        if let Ok(text) = std::fs::read_to_string(&status_path) {
            let hwm = text
                .lines()
                .find_map(|l| l.strip_prefix("VmHWM:"))
                .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<i64>().ok());
            if let Some(hwm) = hwm {
                peak = peak.max(hwm);
            }
        }
        if let Some(status) = child.try_wait().expect("wait") {
            break status;
        }
        std::thread::sleep(std::time::Duration::from_millis(1));
    };
    (status.code().unwrap_or(-1), peak)
}

/// Apply `p ↦ Q p + s` to every shot, composing `Qᵀ` into each
/// world→camera rotation.
pub fn rigidly_moved(
    rec: &triage::sfm::Reconstruction,
    q: nalgebra::Vector3<f64>,
    s: nalgebra::Vector3<f64>,
) -> triage::sfm::Reconstruction {
    let q = nalgebra::Rotation3::new(q);
    let mut out = triage::sfm::Reconstruction {
        cameras: rec.cameras.clone(),
        ..Default::default()
    };
    for shot in rec.shots.values() {
        let r = nalgebra::Rotation3::new(shot.rotation) * q.inverse();
        let p = q * shot.position() + s;
        let moved =
            triage::sfm::Shot::from_position(shot.id.clone(), shot.camera.clone(), r.scaled_axis(), p)
                .unwrap();
        out.shots.insert(shot.id.clone(), moved);
    }
    out
}
