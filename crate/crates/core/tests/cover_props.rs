use feigencert::cover::{build_cover, refine_to, Cover, CoverParams, Target};
use feigencert::domain::Geometry;
use feigencert::FeigenbaumMap;
use proptest::prelude::*;

fn ctx() -> (&'static FeigenbaumMap, &'static Geometry) {
    (FeigenbaumMap::global(), Geometry::global())
}

fn build(target: Target, n: u32, e: u32) -> Cover {
    let (m, g) = ctx();
    build_cover(m, g, &CoverParams { target, n, max_steps: 20, spacing_exp: e }).unwrap().0
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn builds_are_identical_across_thread_counts() {
    for (target, n, e) in [(Target::Xtilde, 4, 7), (Target::Sigma, 6, 8), (Target::P0, 2, 5)] {
        let one = in_pool(1, || build(target, n, e));
        let four = in_pool(4, || build(target, n, e));
        assert_eq!(one.to_file_string(), four.to_file_string(), "{}", target.name());
    }
}

#[test]
fn resumed_build_equals_direct_build() {
    let (m, g) = ctx();
    for (target, n) in [(Target::Xtilde, 5), (Target::Sigma, 6)] {
        let coarse = build(target, n, 5);
        let text = coarse.to_file_string();
        let reloaded = Cover::parse(&text).unwrap();
        let (resumed, _) = refine_to(m, g, &reloaded, 8).unwrap();
        let direct = build(target, n, 8);
        assert!(!direct.cells.is_empty());
        assert_eq!(resumed, direct);
    }
}

#[test]
fn refinement_is_monotone_in_area() {
    let x6 = build(Target::Xtilde, 4, 6).area_bound().bound;
    let x7 = build(Target::Xtilde, 4, 7).area_bound().bound;
    assert!(x7 <= x6);
    let s8 = build(Target::Sigma, 6, 8);
    let s9 = build(Target::Sigma, 6, 9);
    assert!(!s8.cells.is_empty());
    assert!(s9.area_bound().bound >= s8.area_bound().bound);
    // Every included coarse cell stays included through its children.
    for &(ix, iy) in &s8.cells {
        assert!(s9.contains_cell(2 * ix, 2 * iy) && s9.contains_cell(2 * ix + 1, 2 * iy + 1));
    }
}

#[test]
fn refine_rejects_foreign_covers() {
    let (m, g) = ctx();
    let mut c = build(Target::P0, 2, 4);
    c.checksum = "00".repeat(32);
    assert!(refine_to(m, g, &c, 5).is_err());
    let c = build(Target::P0, 2, 5);
    assert!(refine_to(m, g, &c, 4).is_err());
}

#[test]
fn corrupted_cover_files_are_rejected() {
    let text = build(Target::P0, 2, 4).to_file_string();
    // Unsorted cell lines.
    let mut lines: Vec<&str> = text.lines().collect();
    let n = lines.len();
    lines.swap(n - 1, n - 2);
    assert!(Cover::parse(&lines.join("\n")).is_err());
    // Wrong cell count.
    assert!(Cover::parse(&text.replace("cells ", "cells 1")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cover_files_roundtrip(cells in proptest::collection::btree_set((0u32..40, 0u32..40), 0..200)) {
        let mut c = build(Target::P0, 2, 4);
        c.cells = cells.into_iter().filter(|&(x, y)| x < c.grid.nx && y < c.grid.ny).collect();
        let back = Cover::parse(&c.to_file_string()).unwrap();
        prop_assert_eq!(back.to_file_string(), c.to_file_string());
        prop_assert_eq!(back, c);
    }
}
