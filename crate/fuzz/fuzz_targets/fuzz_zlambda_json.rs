#![no_main]

use libfuzzer_sys::fuzz_target;
use nonpisot::algebra::ZLambda;

fuzz_target!(|data: &[u8]| {
    let Ok(z) = serde_json::from_slice::<ZLambda>(data) else { return };
    // Decoded values must survive a serialise/deserialise round trip and
    // keep their exact arithmetic invariants.
    let json = serde_json::to_string(&z).expect("serialise");
    let back: ZLambda = serde_json::from_str(&json).expect("round trip");
    assert_eq!(z, back);
    assert_eq!(z.conj().conj(), z);
    assert!(z.abs_real().sign() >= 0);
    assert_eq!(z.abs_real().sign() == 0, z.sign() == 0);
});
