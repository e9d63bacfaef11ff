//! Builds a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "sps.h"

int main(void) {
    const char *src =
        "operator t -> Real;\n"
        "rule tick: -> t = t + 1;\n"
        "init { t = 0; }\n";
    SpsProgram *p = NULL;
    if (sps_program_parse(src, &p) != SPS_STATUS_OK) return 1;
    if (sps_program_check(p) != SPS_STATUS_OK) return 2;
    SpsRunOptions o = sps_run_options_default();
    o.max_steps = 3;
    char *json = NULL;
    if (sps_program_run(p, &o, &json) != SPS_STATUS_OK) return 3;
    printf("%s\n", json);
    sps_string_free(json);
    sps_program_free(p);

    SpsProgram *bad = NULL;
    SpsStatus s = sps_program_parse("rule r: -> x = 1;", &bad);
    printf("status %d: %s\n", (int)s, sps_last_error());
    return bad == NULL && s == SPS_STATUS_PARSE ? 0 : 4;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libsps_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("client.c");
    let exe = dir.path().join("client");
    std::fs::write(&c, CLIENT).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&c)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap_or_else(|e| panic!("cannot run {cc}: {e}"));
    assert!(status.success(), "C client failed to build");
    let out = Command::new(&exe).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "client exited with {}: {text}", out.status);
    assert!(text.contains("\"t\":\"3\""), "{text}");
    assert!(text.contains("status 3: "), "{text}");
}
