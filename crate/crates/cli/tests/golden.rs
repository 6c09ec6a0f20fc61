//! Shipped recipes against their golden outputs. Regenerate with
//! `NVSQUEEZE_BLESS=1 cargo test -p nvsqueeze-cli --test golden`.

mod common;

use common::{recipes_dir, run_recipe, RECIPES};

#[test]
fn recipes_match_golden_outputs() {
    let bless = std::env::var("NVSQUEEZE_BLESS").is_ok_and(|v| v == "1");
    let mut stale = Vec::new();
    for &(name, cmd) in RECIPES {
        let text = run_recipe(name, cmd);
        let path = recipes_dir().join("golden").join(format!("{name}.csv"));
        if bless {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if golden != text {
            stale.push(name);
        }
    }
    assert!(stale.is_empty(), "outputs differ from golden files: {stale:?}");
}
