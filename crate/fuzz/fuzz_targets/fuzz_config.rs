#![no_main]

use libfuzzer_sys::fuzz_target;
use nonpisot::config::parse_str;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_str(text) else { return };
    // Accepted input must round-trip through its own serialisation.
    let mut rendered = String::new();
    for (k, v) in cfg.entries() {
        rendered.push_str(k);
        rendered.push('=');
        rendered.push_str(v);
        rendered.push('\n');
    }
    let again = parse_str(&rendered).expect("rendered config must parse");
    assert_eq!(cfg, again);
});
