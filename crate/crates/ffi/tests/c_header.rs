//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "ordinal_threshold.h"

int main(void) {
    OtDistribution *d = NULL;
    if (ot_distribution_from_name("H-1/3", &d) != OT_STATUS_OK) return 1;
    size_t n = 0, k = 0;
    ot_distribution_num_points(d, &n);
    ot_distribution_num_classes(d, &k);
    double bayes = -1.0;
    if (ot_bayes_error(d, OT_TASK_ZERO_ONE, &bayes) != OT_STATUS_OK) return 2;
    OtFit *f = NULL;
    if (ot_fit(d, "bogus", 10, &f) != OT_STATUS_PARSE || f != NULL) return 3;
    if (ot_last_error() == NULL || strstr(ot_last_error(), "bogus") == NULL) return 4;
    printf("%zu %zu %.6f %s\n", n, k, bayes, ot_version());
    ot_distribution_free(d);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libordinal_threshold_ffi.a");
    assert!(lib.exists(), "missing {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = std::env::temp_dir().join(format!("ot_c_{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let src = tmp.join("main.c");
    let bin = tmp.join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    std::fs::remove_dir_all(&tmp).ok();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let line = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields[..2], ["100", "10"]);
    assert_eq!(fields[3], env!("CARGO_PKG_VERSION"));
}
