use pamm::{resize_alpha, resize_image, resize_trimap, AlphaMatte, Label, RgbImage, Trimap};

#[test]
fn upsample_two_to_four_follows_half_pixel_centers() {
    // 1-D: [a, b] → [a, ¾a + ¼b, ¼a + ¾b, b]
    let m = AlphaMatte::new(1, 2, vec![0.2, 1.0]).unwrap();
    let up = resize_alpha(&m, 1, 4).unwrap();
    let expect: [f64; 4] = [0.2, 0.4, 0.8, 1.0];
    for (g, e) in up.values().iter().zip(expect) {
        assert!((g - e).abs() < 1e-15);
    }
}

#[test]
fn downsample_four_to_two_averages_pairs() {
    let m = AlphaMatte::new(4, 1, vec![0.0, 0.5, 0.75, 0.25]).unwrap();
    let down = resize_alpha(&m, 2, 1).unwrap();
    assert_eq!(down.values(), &[0.25, 0.5]);
}

#[test]
fn separable_bilinear_on_image() {
    // f(r, c) = r + 10 c is reproduced exactly away from the clamped border
    let img = RgbImage::from_fn(6, 6, |r, c| {
        let v = (r as f64 + 2.0 * c as f64) / 20.0;
        [v, v, 1.0 - v]
    });
    let out = resize_image(&img, 12, 12).unwrap();
    for r in 1..11 {
        for c in 1..11 {
            let sr = (r as f64 + 0.5) / 2.0 - 0.5;
            let sc = (c as f64 + 0.5) / 2.0 - 0.5;
            let v = (sr + 2.0 * sc) / 20.0;
            let px = out.at(r, c);
            assert!((px[0] - v).abs() < 1e-12 && (px[2] - (1.0 - v)).abs() < 1e-12);
        }
    }
}

#[test]
fn trimap_resize_keeps_labels() {
    let t = Trimap::from_fn(2, 2, |r, c| match (r, c) {
        (0, 0) => Label::Foreground,
        (1, 1) => Label::Background,
        _ => Label::Unknown,
    });
    let big = resize_trimap(&t, 4, 4).unwrap();
    assert_eq!(big.labels()[0], Label::Foreground);
    assert_eq!(big.labels()[5], Label::Foreground);
    assert_eq!(big.labels()[15], Label::Background);
    assert_eq!(big.labels()[3], Label::Unknown);
}
