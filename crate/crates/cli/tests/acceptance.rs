//! Acceptance suite: every criterion runs at its stated tolerance against
//! the shipped reference configs, printing one pass/fail line each.

use std::path::PathBuf;

fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

#[test]
fn acceptance_suite() {
    let config_dir = repo_path("configs");
    let out_dir = std::env::temp_dir().join("fraclab-acceptance");
    std::fs::create_dir_all(&out_dir).unwrap();
    let outcomes = fraclab_cli::accept::run_all(&config_dir, &out_dir)
        .unwrap_or_else(|e| panic!("acceptance runner failed: {e}"));
    assert_eq!(outcomes.len(), 14);
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.line())
        .collect();
    assert!(
        failed.is_empty(),
        "acceptance criteria failed:\n{}",
        failed.join("\n")
    );
}
