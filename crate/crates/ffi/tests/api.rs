use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use horizonlab_ffi::*;

fn last_error() -> String {
    let p = hl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn vortex_report_through_handles() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(hl_metric_vortex(-1.0, 1.0, &mut m), HlStatus::Ok);
        let mut g = [0.0; 9];
        assert_eq!(hl_metric_eval(m, 2.0, 0.0, g.as_mut_ptr()), HlStatus::Ok);
        // g^{jk} is symmetric with g^{00} = 1 for rho = c = 1
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], g[3]);
        let mut det = 0.0;
        assert_eq!(hl_metric_spatial_det(m, 1.2, 0.0, &mut det), HlStatus::Ok);
        assert!(det < 0.0, "r = 1.2 lies inside the ergosphere");

        let mut rep = ptr::null_mut();
        assert_eq!(hl_horizon_report(m, 0.3, 3.0, &mut rep), HlStatus::Ok);
        let mut n = 0usize;
        assert_eq!(hl_report_cycle_count(rep, &mut n), HlStatus::Ok);
        assert_eq!(n, 1);
        let mut c = HlCycle {
            fixed_r: 0.0,
            family: 0,
            kind: 0,
            margin: 0.0,
        };
        assert_eq!(hl_report_cycle(rep, 0, &mut c), HlStatus::Ok);
        assert!((c.fixed_r - 1.0).abs() < 1e-6);
        assert_eq!(c.kind, 1);
        assert!(c.margin > 0.1);

        let mut json = ptr::null_mut();
        assert_eq!(hl_report_to_json(rep, &mut json), HlStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        hl_string_free(json);
        assert!(text.contains("\"class\":\"BlackHole\""), "{text}");

        hl_report_free(rep);
        hl_metric_free(m);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        assert_eq!(hl_metric_vortex(1.0, 1.0, ptr::null_mut()), HlStatus::NullPointer);
        assert!(last_error().contains("null"));

        let mut m = ptr::null_mut();
        let bad = CString::new("no_such_scenario").unwrap();
        assert_eq!(hl_metric_from_scenario(bad.as_ptr(), &mut m), HlStatus::Config);
        assert!(m.is_null());
        assert!(last_error().contains("no_such_scenario"));

        let toml = CString::new("name = \"x\"\n[metric]\nfamily = \"vortex\"\na = 1.0\nb = 1.0\nspeed = 2\n").unwrap();
        assert_eq!(hl_metric_from_scenario(toml.as_ptr(), &mut m), HlStatus::Config);
        assert!(last_error().contains("metric.speed"), "{}", last_error());

        let name = CString::new("example1_vortex").unwrap();
        assert_eq!(hl_metric_from_scenario(name.as_ptr(), &mut m), HlStatus::Ok);
        let mut g = [0.0; 9];
        // the punctured vortex is singular at the origin
        assert_eq!(hl_metric_eval(m, 0.0, 0.0, g.as_mut_ptr()), HlStatus::Numerical);
        let mut rep = ptr::null_mut();
        assert_eq!(hl_horizon_report(m, 2.0, 1.0, &mut rep), HlStatus::InvalidArgument);
        hl_metric_free(m);
    }
}

#[test]
fn solver_conserves_energy_without_flow() {
    unsafe {
        let mut m = ptr::null_mut();
        let flat = CString::new("name = \"flat\"\n[metric]\nfamily = \"minkowski\"\n").unwrap();
        assert_eq!(
            hl_metric_from_scenario(flat.as_ptr(), &mut m),
            HlStatus::Ok,
            "{}",
            last_error()
        );
        let mut s = ptr::null_mut();
        assert_eq!(hl_solver_new(m, 64, 256, 0.5, 2.0, &mut s), HlStatus::Ok);
        assert_eq!(hl_solver_set_pulse(s, 1.2, 0.0, 0.2, 1.0), HlStatus::Ok);
        assert_eq!(hl_solver_set_pulse(s, 1.2, 0.0, -1.0, 1.0), HlStatus::InvalidArgument);
        let (mut t, mut e0, mut e1) = (0.0, 0.0, 0.0);
        assert_eq!(hl_solver_energy(s, &mut t, &mut e0, ptr::null_mut()), HlStatus::Ok);
        assert_eq!(hl_solver_advance(s, 0.3, 0.1), HlStatus::Ok);
        assert_eq!(hl_solver_energy(s, &mut t, &mut e1, ptr::null_mut()), HlStatus::Ok);
        assert!((t - 0.3).abs() < 1e-12);
        assert!(e0 > 0.0 && (e1 - e0).abs() < 0.02 * e0, "{e0} -> {e1}");

        let mut written = 0usize;
        assert_eq!(
            hl_solver_field(s, ptr::null_mut(), 0, &mut written),
            HlStatus::InvalidArgument
        );
        let mut buf = vec![0.0; written];
        assert_eq!(
            hl_solver_field(s, buf.as_mut_ptr(), buf.len(), &mut written),
            HlStatus::Ok
        );
        assert!(buf.iter().any(|v| *v != 0.0));
        hl_solver_free(s);
        hl_metric_free(m);
    }
}

#[test]
fn scenario_run_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let name = CString::new("example1_AB12").unwrap();
    let cmd = CString::new("ergosphere").unwrap();
    unsafe {
        assert_eq!(hl_run_scenario(name.as_ptr(), cmd.as_ptr(), out.as_ptr()), HlStatus::Ok);
        let bad = CString::new("nope").unwrap();
        assert_eq!(
            hl_run_scenario(name.as_ptr(), bad.as_ptr(), out.as_ptr()),
            HlStatus::InvalidArgument
        );
    }
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("ergosphere.json").exists());
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles the C smoke test against the generated header and the static
/// library, when a C compiler is present.
#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // the integration test binary sits in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libhorizonlab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new(&cc)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("kind 2"));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
