use std::path::PathBuf;
use std::process::Command;

/// Builds tests/smoke.c against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = [deps.join("libsoesn_ffi.a"), deps.parent().unwrap().join("libsoesn_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("static library is built next to the test binary");
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("soesn_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
