//! Compiles a small C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "dark_pairing.h"

int main(void) {
    const char *cfg = "{\"lattice\": {\"k_fermi\": 1, \"delta\": \"1/2\", \"support\": [[0,0,1]]}}";
    DpLattice *l = NULL;
    if (dp_lattice_from_json(cfg, &l) != DP_STATUS_OK) return 10;
    DpState *s = NULL;
    if (dp_nc_state(l, &s) != DP_STATUS_OK) return 11;
    double r = 1.0;
    if (dp_interaction_residual(l, s, -1, 2, &r) != DP_STATUS_OK || r != 0.0) return 12;
    DpReport *rep = NULL;
    if (dp_verify(l, &rep) != DP_STATUS_OK || !dp_report_passed(rep)) return 13;
    DpLattice *bad = NULL;
    if (dp_lattice_from_json("{", &bad) != DP_STATUS_CONFIG || dp_last_error() == NULL) return 14;
    printf("modes=%zu terms=%zu\n", dp_lattice_mode_count(l), dp_state_term_count(s));
    dp_report_free(rep);
    dp_state_free(s);
    dp_lattice_free(l);
    return 0;
}
"#;

/// `target/<profile>` holding this test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = profile_dir().join("libdark_pairing_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = std::env::temp_dir().join(format!("dp_ffi_smoke_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "modes=4 terms=2\n");
    std::fs::remove_dir_all(&dir).ok();
}
