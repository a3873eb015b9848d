#![no_main]

use dewet::PolygonalCurve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(curve) = PolygonalCurve::read_csv(data) {
        let text = curve.to_csv_string();
        let again = PolygonalCurve::read_csv(text.as_bytes()).expect("written curves parse");
        assert_eq!(curve, again);
    }
});
