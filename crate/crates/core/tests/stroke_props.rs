use std::collections::BTreeMap;

use easel_core::raster::{BinaryImage, Pixel};
use easel_core::strokes::{order_strokes, segment_distance, simplify_indices, skeletonize, trace_strokes, StrokeSet};
use easel_core::topic::{render_glyphs, StrokeFont};
use proptest::prelude::*;

fn blob_image() -> impl Strategy<Value = BinaryImage> {
    (4usize..24, 4usize..24, prop::collection::vec(any::<bool>(), 24 * 24), 0usize..3).prop_map(
        |(w, h, bits, grow)| {
            let mut img = BinaryImage::new(w, h);
            for y in 0..h {
                for x in 0..w {
                    if bits[y * 24 + x] {
                        img.set(x as i32, y as i32, true);
                    }
                }
            }
            // Dilate a few times so there is something thick to thin.
            for _ in 0..grow {
                let src = img.clone();
                for p in src.ink() {
                    img.set(p.x + 1, p.y, true);
                    img.set(p.x, p.y + 1, true);
                }
            }
            img
        },
    )
}

#[test]
fn filled_square_matches_reference_thinning() {
    let golden = BinaryImage::from_ascii(include_str!("../fixtures/golden/square20_skeleton.txt"));
    let mut square = BinaryImage::new(24, 24);
    for y in 2..22 {
        for x in 2..22 {
            square.set(x, y, true);
        }
    }
    let sk = skeletonize(&square);
    assert_eq!(sk, golden, "\n{}", sk.to_ascii());
}

#[test]
fn glyph_corpus_skeletons_are_thin_and_topology_preserving() {
    let font = StrokeFont::builtin();
    for c in font.chars() {
        let ink = render_glyphs(&c.to_string(), 256, 192, &font).unwrap().image;
        let sk = skeletonize(&ink);
        assert!(!sk.has_2x2_block(), "{c}");
        assert!(sk.is_subset_of(&ink), "{c}");
        assert_eq!(sk.components(), ink.components(), "{c}");
        assert_eq!(skeletonize(&sk), sk, "{c}");
        let set = trace_strokes(&sk).unwrap();
        assert_eq!(set.rasterize(256, 192), sk, "{c}");
    }
}

/// Degree of each pixel in the tracing graph, computed independently from
/// the library: 8-neighbours minus diagonals bridged by an edge neighbour.
fn reference_degree(sk: &BinaryImage, p: Pixel) -> usize {
    let mut d = 0;
    for dy in -1i32..=1 {
        for dx in -1i32..=1 {
            if (dx, dy) == (0, 0) || !sk.get(p.x + dx, p.y + dy) {
                continue;
            }
            let bridged = dx != 0 && dy != 0 && (sk.get(p.x + dx, p.y) || sk.get(p.x, p.y + dy));
            if !bridged {
                d += 1;
            }
        }
    }
    d
}

fn blocks(img: &BinaryImage) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for y in 0..img.height() as i32 {
        for x in 0..img.width() as i32 {
            if img.get(x, y) && img.get(x + 1, y) && img.get(x, y + 1) && img.get(x + 1, y + 1) {
                out.push((x, y));
            }
        }
    }
    out
}

/// 4-connected paper components, counting the outside as one.
fn paper_components(img: &BinaryImage) -> usize {
    let (w, h) = (img.width() as i32 + 2, img.height() as i32 + 2);
    let paper = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && !img.get(x - 1, y - 1);
    let mut seen = vec![false; (w * h) as usize];
    let mut count = 0;
    for start in 0..w * h {
        let (sx, sy) = (start % w, start / w);
        if seen[start as usize] || !paper(sx, sy) {
            continue;
        }
        count += 1;
        let mut stack = vec![(sx, sy)];
        seen[start as usize] = true;
        while let Some((x, y)) = stack.pop() {
            for (nx, ny) in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if paper(nx, ny) && !seen[(ny * w + nx) as usize] {
                    seen[(ny * w + nx) as usize] = true;
                    stack.push((nx, ny));
                }
            }
        }
    }
    count
}

/// Whether deleting the pixel leaves ink components and holes unchanged.
fn removable(img: &BinaryImage, x: i32, y: i32) -> bool {
    let mut cut = img.clone();
    cut.set(x, y, false);
    cut.components() == img.components() && paper_components(&cut) == paper_components(img)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn skeleton_invariants_on_random_blobs(img in blob_image()) {
        let sk = skeletonize(&img);
        for (x, y) in blocks(&sk) {
            for (bx, by) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
                prop_assert!(!removable(&sk, bx, by), "removable pixel ({}, {}) left in block\n{:?}", bx, by, sk);
            }
        }
        prop_assert!(sk.is_subset_of(&img));
        prop_assert_eq!(sk.components(), img.components());
        prop_assert_eq!(skeletonize(&sk), sk);
    }

    #[test]
    fn tracing_covers_skeleton_exactly(img in blob_image()) {
        let sk = skeletonize(&img);
        prop_assume!(blocks(&sk).is_empty());
        let set = trace_strokes(&sk).unwrap();
        prop_assert_eq!(set.rasterize(sk.width(), sk.height()), sk.clone());
        let mut seen: BTreeMap<Pixel, usize> = BTreeMap::new();
        for s in &set.strokes {
            prop_assert!(s.windows(2).all(|w| w[0].is_8_neighbor(w[1])));
            let closed = s.len() > 2 && s.first() == s.last();
            let body = if closed { &s[..s.len() - 1] } else { &s[..] };
            for p in body {
                *seen.entry(*p).or_default() += 1;
            }
        }
        for (p, n) in seen {
            if reference_degree(&sk, p) < 3 {
                prop_assert_eq!(n, 1, "non-junction pixel {:?} in {} strokes", p, n);
            }
        }
    }

    #[test]
    fn ordering_is_a_permutation_that_never_travels_further(
        raw in prop::collection::vec(prop::collection::vec((0i32..60, 0i32..60), 1..5), 0..10),
        sx in 0i32..60, sy in 0i32..60,
    ) {
        let set = StrokeSet { strokes: raw.iter().map(|s| s.iter().map(|&(x, y)| Pixel::new(x, y)).collect()).collect() };
        let start = Pixel::new(sx, sy);
        let ordered = order_strokes(&set, start);
        prop_assert!(ordered.travel(start) <= set.travel(start) + 1e-9);
        let canon = |s: &StrokeSet| {
            let mut v: Vec<Vec<Pixel>> = s.strokes.iter().map(|st| {
                let mut r = st.clone();
                r.reverse();
                st.clone().min(r)
            }).collect();
            v.sort();
            v
        };
        prop_assert_eq!(canon(&ordered), canon(&set));
    }

    #[test]
    fn simplification_stays_within_epsilon(
        pts in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..40),
        eps in 0.0f64..10.0,
    ) {
        let keep = simplify_indices(&pts, eps);
        prop_assert_eq!(keep[0], 0);
        prop_assert_eq!(*keep.last().unwrap(), pts.len() - 1);
        for w in keep.windows(2) {
            for i in w[0]..=w[1] {
                let d = segment_distance(pts[i], pts[w[0]], pts[w[1]]);
                prop_assert!(d <= eps + 1e-9, "vertex {} deviates {} > {}", i, d, eps);
            }
        }
    }
}

/// Exact minimum pen-up travel over every order and orientation.
fn optimal_travel(strokes: &[Vec<Pixel>], start: Pixel) -> f64 {
    fn search(strokes: &[Vec<Pixel>], used: &mut [bool], at: Pixel, so_far: f64, best: &mut f64) {
        if so_far >= *best {
            return;
        }
        if used.iter().all(|u| *u) {
            *best = so_far;
            return;
        }
        for i in 0..strokes.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let (a, b) = (strokes[i][0], *strokes[i].last().unwrap());
            search(strokes, used, b, so_far + at.dist(a), best);
            search(strokes, used, a, so_far + at.dist(b), best);
            used[i] = false;
        }
    }
    let mut best = f64::INFINITY;
    search(strokes, &mut vec![false; strokes.len()], start, 0.0, &mut best);
    best
}

#[test]
fn greedy_ordering_against_exhaustive_search() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst_gap: f64 = 1.0;
    for _ in 0..40 {
        let strokes: Vec<Vec<Pixel>> = (0..8)
            .map(|_| {
                let (x, y) = (rng.random_range(0..100), rng.random_range(0..100));
                vec![Pixel::new(x, y), Pixel::new(x + rng.random_range(-10..10), y + rng.random_range(-10..10))]
            })
            .collect();
        let set = StrokeSet { strokes: strokes.clone() };
        let start = Pixel::new(0, 0);
        let greedy = order_strokes(&set, start).travel(start);
        let best = optimal_travel(&strokes, start);
        assert!(greedy <= set.travel(start) + 1e-9);
        assert!(best <= greedy + 1e-9);
        worst_gap = worst_gap.max(greedy / best);
    }
    // Greedy stays reasonably close to optimal on scattered short strokes.
    assert!(worst_gap < 2.0, "worst greedy/optimal ratio {worst_gap}");
}
