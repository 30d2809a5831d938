use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use evanescent_ffi::*;

fn last_error() -> String {
    let p = ev_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(ev_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn closure_headline() {
    let mut u = 0.0;
    assert_eq!(unsafe { ev_closure_speed_ratio(1.6, &mut u) }, EvStatus::Ok);
    assert!((u - 4.7699).abs() < 5e-3);
}

#[test]
fn null_output_is_reported() {
    let status = unsafe { ev_free_path(1e28, 6.65e-29, ptr::null_mut()) };
    assert_eq!(status, EvStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn invalid_argument_sets_message() {
    let mut l = 0.0;
    assert_eq!(unsafe { ev_free_path(-1.0, 1.0, &mut l) }, EvStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn pole_and_on_shell_statuses() {
    let c = 299_792_458.0;
    let mut t = 0.0;
    let status = unsafe { ev_mixed_formation_time(std::f64::consts::PI * c, 1.0, 1e-9, &mut t) };
    assert_eq!(status, EvStatus::Pole);

    let mut p = EvPropagatorTimes::default();
    assert_eq!(unsafe { ev_photon_propagator_times(2.0 * c, 2.0, 1e-9, &mut p) }, EvStatus::OnShell);
    assert_eq!(EV_ON_SHELL_DELAY_WEIGHT, -std::f64::consts::PI);
    assert_eq!(unsafe { ev_photon_propagator_times(2.0 * c, 1.0, 1e-9, &mut p) }, EvStatus::Ok);
    assert!(p.retarded && (p.tau2 - 1.0 / c).abs() < 1e-15);
}

#[test]
fn series_matches_closed_form() {
    let c = 299_792_458.0;
    let (mut direct, mut series) = (0.0, 0.0);
    unsafe {
        assert_eq!(ev_mixed_formation_time(1.3 * c, 1.0, 1e-9, &mut direct), EvStatus::Ok);
        assert_eq!(ev_renormalized_formation_time(1.3 * c, 1.0, 2000, 1e-9, &mut series), EvStatus::Ok);
    }
    // the series drops the Coulomb term r/(c·x)
    let coulomb = 1.0 / (c * 1.3);
    assert!(((series - coulomb) - direct).abs() < 1e-12 * direct.abs().max(1e-9));
}

#[test]
fn tabulated_pair_of_pure_delay() {
    let t0 = 2e-3;
    let omega: Vec<f64> = (0..401).map(|i| 100.0 + i as f64).collect();
    let re: Vec<f64> = omega.iter().map(|w| (w * t0).cos()).collect();
    let im: Vec<f64> = omega.iter().map(|w| (w * t0).sin()).collect();
    let mut pair = EvTemporalPair::default();
    let status = unsafe {
        ev_temporal_pair_tabulated(omega.as_ptr(), re.as_ptr(), im.as_ptr(), omega.len(), 300.0, 0.0, true, &mut pair)
    };
    assert_eq!(status, EvStatus::Ok, "{}", last_error());
    assert!((pair.tau1 - t0).abs() < 1e-6 * t0, "{pair:?}");
    assert!(pair.tau2.abs() < 1e-6 * t0, "{pair:?}");
}

#[test]
fn massive_branch_flag() {
    let mut pair = EvTemporalPair::default();
    let mut above = false;
    unsafe {
        assert_eq!(ev_massive_temporal(2.0, 1.0, 0.7, 1e-9, &mut pair, &mut above), EvStatus::Ok);
        assert!(above);
        assert_eq!(ev_massive_temporal(0.5, 1.0, 0.7, 1e-9, &mut pair, &mut above), EvStatus::Ok);
        assert!(!above);
        assert_eq!(ev_massive_temporal(0.5, 1.0, 0.7, 1e-9, &mut pair, ptr::null_mut()), EvStatus::Ok);
    }
}

#[test]
fn monte_carlo_is_thread_independent() {
    let cfg = EvWalkConfig {
        mean_free_path: 1.0,
        jump: 3.7699,
        delay: 0.0,
        length: 100.0,
        n_walkers: 4000,
        master_seed: 7,
        exit_rule: EvExitRule::CompleteCycle,
    };
    let (mut a, mut b) = (EvTransportResult::default(), EvTransportResult::default());
    unsafe {
        assert_eq!(ev_mc_simulate(&cfg, 1, &mut a), EvStatus::Ok);
        assert_eq!(ev_mc_simulate(&cfg, 4, &mut b), EvStatus::Ok);
    }
    assert_eq!(a, b);
    assert_eq!(a.walker_count, 4000);
    assert!((a.mean_speed_ratio - 4.7699).abs() < 6.0 * a.standard_error);

    let bad = EvWalkConfig { mean_free_path: 0.0, ..cfg };
    assert_eq!(unsafe { ev_mc_simulate(&bad, 0, &mut a) }, EvStatus::InvalidArgument);
    assert_eq!(unsafe { ev_mc_simulate(ptr::null(), 0, &mut a) }, EvStatus::NullPointer);
}

#[test]
fn uncertainty_functions() {
    let mut t = 0.0;
    assert_eq!(unsafe { ev_minimal_time(1e-3, EvProcessKind::Decay, &mut t) }, EvStatus::Ok);
    assert!(t > 0.0);

    let mut maxima = [0.0; 3];
    assert_eq!(unsafe { ev_transition_maxima(1.0, 3, maxima.as_mut_ptr()) }, EvStatus::Ok);
    assert!(maxima.windows(2).all(|w| w[0] < w[1]));

    // Pauli x and y on spin-up: equality case 1 = 1
    let sx = [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let sy = [0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0];
    let up = [1.0, 0.0, 0.0, 0.0];
    let mut r = EvRsBound::default();
    let status = unsafe { ev_rs_bound(2, sx.as_ptr(), sy.as_ptr(), up.as_ptr(), &mut r) };
    assert_eq!(status, EvStatus::Ok, "{}", last_error());
    assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12, "{r:?}");
}

#[test]
fn particle_table_handle() {
    let mut table = ptr::null_mut();
    unsafe {
        assert_eq!(ev_particle_table_bundled(&mut table), EvStatus::Ok);
        assert_eq!(ev_particle_table_len(table), 3);
        let mut p = 0.0;
        assert_eq!(ev_particle_table_product(table, 0, &mut p), EvStatus::Ok);
        assert!((p - 0.47372).abs() < 1e-4);
        assert_eq!(ev_particle_table_product(table, 9, &mut p), EvStatus::OutOfRange);
        ev_particle_table_free(table);
        ev_particle_table_free(ptr::null_mut());
        assert_eq!(ev_particle_table_len(ptr::null()), 0);

        let bad = CString::new("K0 | x | 1e-10 | mean\n").unwrap();
        let mut t2 = ptr::null_mut();
        assert_eq!(ev_particle_table_load(bad.as_ptr(), &mut t2), EvStatus::ParseError);
        assert!(last_error().contains("line 1"));
    }
}

#[test]
fn bounds_and_neutrino() {
    let mut b = 0.0;
    assert_eq!(unsafe { ev_lifetime_bound(94.8e-10, 0.775, &mut b) }, EvStatus::Ok);
    assert!((b / 5.381e-14 - 1.0).abs() < 1e-3);

    let mut n = EvNeutrinoEstimate::default();
    assert_eq!(unsafe { ev_neutrino_mass_estimate(1000.0, 1.0, &mut n) }, EvStatus::Ok);
    assert!((n.delta_m / 1e-4 - 1.0).abs() < 1e-12);
    assert!(n.flag_count >= 3);
}

/// Compiles a small C program against the generated header and static
/// library. Skipped when no C compiler or static library is available.
#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libevanescent_ffi.a"))
        .find(|p| p.exists());
    let (Some(lib), true) = (lib, Command::new("cc").arg("--version").output().is_ok()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile_dir();
    let src = dir.join("probe.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "evanescent.h"
int main(void) {
    double u = 0.0;
    if (ev_closure_speed_ratio(1.6, &u) != EV_STATUS_OK) return 1;
    if (ev_free_path(-1.0, 1.0, &u) != EV_STATUS_INVALID_ARGUMENT) return 2;
    if (ev_last_error_message() == NULL) return 3;
    EvParticleTable *t = NULL;
    if (ev_particle_table_bundled(&t) != EV_STATUS_OK) return 4;
    size_t n = ev_particle_table_len(t);
    ev_particle_table_free(t);
    printf("%zu\n", n);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("probe");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "probe exited with {:?}", out.status);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3");
}

fn tempfile_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("ffi-probe-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
