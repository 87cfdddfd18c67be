//! Compile a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "stencilforge.h"

int main(void) {
    size_t shape[2] = {21, 21};
    double spacing[2] = {10.0, 10.0};
    SfModel *model = NULL;
    if (sf_model_new_constant(2, shape, spacing, 1500.0, 5, 4, &model) != SF_STATUS_OK) return 1;
    double dt = 0.0;
    sf_model_critical_dt(model, &dt);
    double src[2] = {100.0, 20.0}, rec[2] = {100.0, 150.0};
    SfGeometry *geom = NULL;
    if (sf_geometry_new_ricker(2, 1, src, 1, rec, 0.0, 0.2, 0.8 * dt, 25.0, &geom) != SF_STATUS_OK) return 2;
    size_t nt = 0, nrec = 0;
    sf_geometry_dims(geom, &nt, &nrec);
    SfSolver *solver = NULL;
    if (sf_solver_new(model, geom, &solver) != SF_STATUS_OK) return 3;
    double traces[4096];
    if (nt * nrec > 4096 || sf_solver_forward(solver, model, traces, nt * nrec) != SF_STATUS_OK) return 4;
    double peak = 0.0;
    for (size_t i = 0; i < nt * nrec; i++) peak = traces[i] > peak ? traces[i] : (-traces[i] > peak ? -traces[i] : peak);
    if (sf_solver_forward(solver, model, traces, 1) != SF_STATUS_INVALID_ARGUMENT) return 5;
    if (sf_last_error_message() == NULL) return 6;
    sf_solver_free(solver);
    sf_geometry_free(geom);
    sf_model_free(model);
    printf("%s %zu %.6e\n", sf_version(), nt, peak);
    return peak > 0.0 ? 0 : 7;
}
"#;

fn cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libstencilforge_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "exit {:?}: {stdout}", run.status.code());
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")));
}
