#![no_main]

use libfuzzer_sys::fuzz_target;
use nonpisot::inflation::{substitute_letters, supertile_decompose};

fuzz_target!(|data: &[u8]| {
    let Ok(dec) = supertile_decompose(data) else { return };
    // Any accepted word must be rebuilt exactly from the decomposition:
    // leading 1s, the substituted preimage, then a truncated block prefix.
    let mut rebuilt = vec![1u8; dec.leading];
    rebuilt.extend(substitute_letters(&dec.preimage(), 1));
    if dec.trailing > 0 {
        rebuilt.push(0);
        rebuilt.extend(std::iter::repeat(1).take(dec.trailing - 1));
    }
    assert_eq!(rebuilt.as_slice(), data);
});
