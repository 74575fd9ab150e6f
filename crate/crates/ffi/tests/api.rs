use std::ffi::{CStr, CString};
use std::ptr;

use serde_json::Value;
use soesn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(soesn_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn take_json(s: *mut std::ffi::c_char) -> Value {
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    soesn_string_free(s);
    v
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(soesn_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn spectral_radius_of_a_rotation() {
    let w = [0.0, -2.0, 2.0, 0.0];
    let mut rho = 0.0;
    assert_eq!(unsafe { soesn_spectral_radius(2, w.as_ptr(), &mut rho) }, SoesnStatus::Ok);
    assert!((rho - 2.0).abs() < 1e-10);
}

#[test]
fn explicit_weights_run_and_copy() {
    let w = [0.0, 0.5, -0.5, 0.0];
    let leak = [1.0, 1.0];
    let state = [0.3, -0.2];
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(soesn_reservoir_from_weights(2, w.as_ptr(), leak.as_ptr(), state.as_ptr(), &mut r), SoesnStatus::Ok);
        assert_eq!(soesn_reservoir_size(r), 2);
        let mut t = ptr::null_mut();
        assert_eq!(soesn_reservoir_run(r, 3, &mut t), SoesnStatus::Ok);
        assert_eq!((soesn_trajectory_steps(t), soesn_trajectory_units(t)), (4, 2));
        let mut rows = [0.0; 8];
        assert_eq!(soesn_trajectory_copy(t, rows.as_mut_ptr(), rows.len()), SoesnStatus::Ok);
        assert_eq!(&rows[..2], &state);
        // x1 = tanh(W x0) at full leak.
        assert_eq!(rows[2], (0.5f64 * -0.2).tanh());
        assert_eq!(rows[3], (-0.5f64 * 0.3).tanh());

        let mut now = [0.0; 2];
        assert_eq!(soesn_reservoir_state(r, now.as_mut_ptr(), 2), SoesnStatus::Ok);
        assert_eq!(&now, &rows[6..]);
        soesn_trajectory_free(t);
        soesn_reservoir_free(r);
    }
}

#[test]
fn short_buffers_are_rejected() {
    let w = [0.0, 1.0, -1.0, 0.0];
    let (leak, state) = ([0.5, 0.5], [0.1, 0.1]);
    let mut r = ptr::null_mut();
    unsafe {
        soesn_reservoir_from_weights(2, w.as_ptr(), leak.as_ptr(), state.as_ptr(), &mut r);
        let mut one = [0.0; 1];
        assert_eq!(soesn_reservoir_state(r, one.as_mut_ptr(), 1), SoesnStatus::Dimension);
        assert!(last_error().contains("needs room for 2"));
        soesn_reservoir_free(r);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut r = ptr::null_mut();
    let w = [1.0];
    let bad_leak = [1.5];
    let state = [0.2];
    unsafe {
        assert_eq!(
            soesn_reservoir_from_weights(1, w.as_ptr(), bad_leak.as_ptr(), state.as_ptr(), &mut r),
            SoesnStatus::InvalidInput
        );
        assert!(r.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            soesn_reservoir_from_weights(1, ptr::null(), bad_leak.as_ptr(), state.as_ptr(), &mut r),
            SoesnStatus::NullPointer
        );
        assert!(last_error().contains("weights"));

        let zero = [0.0; 4];
        let mut rho = 0.0;
        assert_eq!(soesn_spectral_radius(2, zero.as_ptr(), &mut rho), SoesnStatus::Ok);
        assert_eq!(last_error(), "");

        let json = CString::new(r#"{"kind": "dense", "n": 10, "seed": 1}"#).unwrap();
        assert_eq!(soesn_reservoir_from_topology(json.as_ptr(), 0.0, 0.5, 1, &mut r), SoesnStatus::InvalidInput);
        let json = CString::new(r#"{"kind": "dense", "n": 10, "colour": 1}"#).unwrap();
        assert_eq!(soesn_reservoir_from_topology(json.as_ptr(), 1.0, 0.5, 1, &mut r), SoesnStatus::InvalidInput);
        assert!(last_error().contains("colour"));
    }
}

#[test]
fn topology_classify_and_readout() {
    let json = CString::new(r#"{"kind": "weakly_coupled", "n": 60, "sub_count": 3, "seed": 4}"#).unwrap();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(soesn_reservoir_from_topology(json.as_ptr(), 1.25, 0.5, 9, &mut r), SoesnStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(soesn_reservoir_run(r, 400, &mut t), SoesnStatus::Ok);

        let mut report = ptr::null_mut();
        assert_eq!(soesn_trajectory_classify(t, 100, &mut report), SoesnStatus::Ok);
        let report = take_json(report);
        assert_eq!(report["per_unit"].as_array().unwrap().len(), 60);
        assert_eq!(report["window"], 100);

        // A target that is an exact linear function of the states is recovered.
        let steps = soesn_trajectory_steps(t);
        let mut states = vec![0.0; steps * 60];
        soesn_trajectory_copy(t, states.as_mut_ptr(), states.len());
        let target: Vec<f64> = (0..steps).map(|k| states[k * 60] - 0.5 * states[k * 60 + 7]).collect();
        let mut m = ptr::null_mut();
        assert_eq!(soesn_readout_train(t, target.as_ptr(), steps, 1, 1e-10, 50, &mut m), SoesnStatus::Ok);
        assert_eq!(soesn_readout_output_dim(m), 1);
        let mut y = vec![0.0; steps];
        assert_eq!(soesn_readout_predict(m, t, y.as_mut_ptr(), steps), SoesnStatus::Ok);
        let worst = y[50..].iter().zip(&target[50..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");

        let mut model = ptr::null_mut();
        assert_eq!(soesn_readout_to_json(m, &mut model), SoesnStatus::Ok);
        let model = take_json(model);
        assert_eq!(model["lambda"], 1e-10);
        assert!(model.get("W_out").is_some());

        assert_eq!(soesn_readout_train(t, target.as_ptr(), steps - 1, 1, 1e-8, 0, &mut m), SoesnStatus::Dimension);

        soesn_readout_free(m);
        soesn_trajectory_free(t);
        soesn_reservoir_free(r);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        soesn_reservoir_free(ptr::null_mut());
        soesn_trajectory_free(ptr::null_mut());
        soesn_readout_free(ptr::null_mut());
        soesn_string_free(ptr::null_mut());
        assert_eq!(soesn_reservoir_size(ptr::null()), 0);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/soesn.h")).unwrap();
    for symbol in [
        "SOESN_STATUS_OK",
        "SOESN_STATUS_PANIC",
        "typedef struct SoesnReservoir SoesnReservoir",
        "soesn_reservoir_run",
        "soesn_readout_train",
        "soesn_string_free",
        "soesn_last_error",
    ] {
        assert!(header.contains(symbol), "{symbol}");
    }
}
