use chrono::NaiveDate;
use easel_core::raster::BinaryImage;
use easel_core::topic::{
    margin_for, render_glyphs, render_topic, select_topic, FixtureTranslations, FixtureTrends, StrokeFont, TopicError,
};
use proptest::prelude::*;

/// Ink bounding box by a direct scan over every pixel: (min_x, min_y, max_x, max_y).
fn scan_bbox(img: &BinaryImage) -> Option<(i32, i32, i32, i32)> {
    let mut bb: Option<(i32, i32, i32, i32)> = None;
    for y in 0..img.height() as i32 {
        for x in 0..img.width() as i32 {
            if img.get(x, y) {
                bb = Some(match bb {
                    None => (x, y, x, y),
                    Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                });
            }
        }
    }
    bb
}

fn diagonal(img: &BinaryImage) -> f64 {
    let (x0, y0, x1, y1) = scan_bbox(img).expect("ink");
    (((x1 - x0 + 1) as f64).powi(2) + ((y1 - y0 + 1) as f64).powi(2)).sqrt()
}

#[test]
fn womens_history_month_fills_the_frame_inside_the_margin() {
    let day = NaiveDate::from_ymd_opt(2021, 3, 8).unwrap();
    let topic = select_topic(day, &FixtureTrends::builtin(), &FixtureTranslations::builtin()).unwrap();
    assert_eq!(topic.keyword_glyphs, "女性史月間");
    let raster = render_topic(&topic, 1024, 768, &StrokeFont::builtin()).unwrap();
    assert!(raster.image.count() > 0);
    let (x0, y0, x1, y1) = scan_bbox(&raster.image).unwrap();
    let (mx, my) = (margin_for(1024) as i32, margin_for(768) as i32);
    assert!(mx as f64 >= 0.05 * 1024.0 && my as f64 >= 0.05 * 768.0);
    assert!(x0 >= mx && y0 >= my && x1 < 1024 - mx && y1 < 768 - my, "{:?}", (x0, y0, x1, y1));
    // Largest size that fits: one of the axes reaches its margin within a pixel or two.
    assert!(x0 - mx <= 2 || y0 - my <= 2, "{:?}", (x0, y0, x1, y1));
}

#[test]
fn fixture_gaps_are_reported() {
    let trends = FixtureTrends::builtin();
    let dict = FixtureTranslations::builtin();
    let absent = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    assert_eq!(select_topic(absent, &trends, &dict), Err(TopicError::NoTrendData(absent)));
    let unicorn = NaiveDate::from_ymd_opt(2021, 9, 1).unwrap();
    assert!(matches!(select_topic(unicorn, &trends, &dict), Err(TopicError::TranslationUnavailable(_))));
}

fn glyphs() -> impl Strategy<Value = String> {
    let chars: Vec<char> = StrokeFont::builtin().chars().collect();
    prop::collection::vec(prop::sample::select(chars), 1..5).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn doubling_the_raster_doubles_the_glyphs(text in glyphs(), w in 64usize..320, h in 64usize..240) {
        let font = StrokeFont::builtin();
        let small = render_glyphs(&text, w, h, &font).unwrap().image;
        let large = render_glyphs(&text, 2 * w, 2 * h, &font).unwrap().image;
        prop_assert!(diagonal(&large) >= 2.0 * diagonal(&small), "{} vs {}", diagonal(&large), diagonal(&small));
    }

    #[test]
    fn rendering_is_deterministic_and_respects_margins(text in glyphs(), w in 64usize..400, h in 64usize..300) {
        let font = StrokeFont::builtin();
        let a = render_glyphs(&text, w, h, &font).unwrap().image;
        prop_assert_eq!(&a, &render_glyphs(&text, w, h, &font).unwrap().image);
        let (x0, y0, x1, y1) = scan_bbox(&a).unwrap();
        let (mx, my) = (margin_for(w) as i32, margin_for(h) as i32);
        prop_assert!(x0 >= mx && y0 >= my && x1 < w as i32 - mx && y1 < h as i32 - my);
    }
}
