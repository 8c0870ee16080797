//! Zhang-Suen thinning with topology checks.
//!
//! Each subiteration collects the classic Zhang-Suen deletion candidates
//! from the current image, then deletes them one at a time in raster order,
//! keeping any candidate that has stopped being simple because of an
//! earlier deletion. This keeps two-pixel-thick diagonals and
//! 2×2 blocks from vanishing. A final pass removes one simple pixel from any
//! 2×2 block that survives once the subiterations stop changing the image.
//! The whole procedure repeats until nothing changes, so the result is a
//! fixpoint.

use crate::raster::BinaryImage;

/// Neighbours clockwise from north: P2..P9 in Zhang-Suen numbering.
const RING: [(i32, i32); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn ring(img: &BinaryImage, x: i32, y: i32) -> [bool; 8] {
    RING.map(|(dx, dy)| img.get(x + dx, y + dy))
}

fn ink_neighbors(n: &[bool; 8]) -> usize {
    n.iter().filter(|b| **b).count()
}

/// Paper→ink transitions around the ring.
fn transitions(n: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count()
}

/// Yokoi connectivity number for 8-connected foreground. A pixel whose
/// removal changes neither the number of ink components nor holes has
/// value 1.
fn connectivity_number(n: &[bool; 8]) -> usize {
    // Ring order N, NE, E, SE, S, SW, W, NW; the four edge neighbours sit at
    // even indices.
    let q = |i: usize| !n[i % 8];
    [0, 2, 4, 6]
        .iter()
        .filter(|&&k| q(k) && !(q(k) && q(k + 1) && q(k + 2)))
        .count()
}

/// Deleting a simple pixel changes neither components nor holes.
fn is_simple(img: &BinaryImage, x: i32, y: i32) -> bool {
    connectivity_number(&ring(img, x, y)) == 1
}

fn zhang_suen_candidate(n: &[bool; 8], first: bool) -> bool {
    let b = ink_neighbors(n);
    if !(2..=6).contains(&b) || transitions(n) != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *n;
    if first {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

fn subiteration(img: &mut BinaryImage, first: bool) -> bool {
    let candidates: Vec<_> = img
        .ink()
        .filter(|p| zhang_suen_candidate(&ring(img, p.x, p.y), first))
        .collect();
    let mut changed = false;
    for p in candidates {
        if is_simple(img, p.x, p.y) {
            img.set(p.x, p.y, false);
            changed = true;
        }
    }
    changed
}

fn break_blocks(img: &mut BinaryImage) -> bool {
    let mut changed = false;
    for y in 0..img.height().saturating_sub(1) as i32 {
        for x in 0..img.width().saturating_sub(1) as i32 {
            let block = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
            if !block.iter().all(|&(bx, by)| img.get(bx, by)) {
                continue;
            }
            if let Some(&(bx, by)) = block.iter().find(|&&(bx, by)| is_simple(img, bx, by)) {
                img.set(bx, by, false);
                changed = true;
            }
        }
    }
    changed
}

pub fn skeletonize(image: &BinaryImage) -> BinaryImage {
    let mut img = image.clone();
    loop {
        let mut changed = subiteration(&mut img, true);
        changed |= subiteration(&mut img, false);
        if !changed {
            changed = break_blocks(&mut img);
        }
        if !changed {
            return img;
        }
    }
}
