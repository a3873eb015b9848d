#![no_main]

use dewet::{manifold_distance, PolygonalCurve};
use libfuzzer_sys::fuzz_target;

// Two node files separated by a blank line.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Some((first, second)) = text.split_once("\n\n") else { return };
    let (Ok(a), Ok(b)) = (
        PolygonalCurve::read_csv(first.as_bytes()),
        PolygonalCurve::read_csv(second.as_bytes()),
    ) else {
        return;
    };
    if let (Ok(ab), Ok(ba)) = (manifold_distance(&a, &b), manifold_distance(&b, &a)) {
        let scale = a.nodes().iter().chain(b.nodes()).fold(1.0f64, |m, p| m.max(p.x * p.x + p.y * p.y));
        if scale.is_finite() && ab.is_finite() {
            assert!(ab >= -1e-9 * scale && (ab - ba).abs() <= 1e-9 * scale);
        }
    }
});
