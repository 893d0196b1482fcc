//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "discoqad.h"

int main(void) {
    double bleu = 0.0;
    if (dq_sentence_bleu("the cat sat", "the cat sat", &bleu) != DQ_STATUS_OK || bleu < 99.99) return 1;
    if (dq_sentence_bleu(NULL, "x", &bleu) != DQ_STATUS_NULL_POINTER || dq_last_error() == NULL) return 2;

    DqRegistry *reg = NULL;
    DqPool *pool = NULL;
    if (dq_registry_new("en", &reg) != DQ_STATUS_OK) return 3;
    if (dq_pool_new("doc", 0, &pool) != DQ_STATUS_OK) return 4;
    const char *texts[] = {"an outlier", "the same words", "the same words", "the same word"};
    for (int i = 0; i < 4; i++)
        if (dq_pool_push(pool, texts[i], NULL, NULL) != DQ_STATUS_OK) return 5;
    size_t chosen = 99;
    double eu[4];
    if (dq_select_mbr(pool, reg, "chrf", false, &chosen, eu, 4) != DQ_STATUS_OK || chosen != 1) return 6;
    if (dq_select_map(pool, &chosen) != DQ_STATUS_VALIDATION) return 7;

    DqEditRate er;
    if (dq_edit_rate("a b c", "a b c d", &er) != DQ_STATUS_OK || er.deletions + er.insertions != 1) return 8;

    char *names = NULL;
    if (dq_registry_names(reg, &names) != DQ_STATUS_OK || strstr(names, "lc") == NULL) return 9;
    dq_string_free(names);
    dq_pool_free(pool);
    dq_registry_free(reg);
    printf("ok %s\n", dq_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler `{cc}`; skipping");
        return;
    }
    let lib = target_dir().join("libdiscoqad_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
