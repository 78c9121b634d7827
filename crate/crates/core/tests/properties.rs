use proptest::prelude::*;

use maskprop::flow::{warp_mask_forward, FlowField};
use maskprop::frame::Frame;
use maskprop::mask::{boundary_pixels, bounding_box, centroid, dilate, iou, BBox, Mask, Point, ProbMap};
use maskprop::memory::{
    spatial_select, update_memory, FrameRecord, FrameScores, MemoryBank, SelectionConfig, UpdatePolicy,
};
use maskprop::metrics::{f_score, j_score};
use maskprop::segmenter::{oracle_segment, Matcher, OracleConfig, PromptSet};
use maskprop::simulator::{generate_scenario, scenario_by_name, SUITE};
use maskprop::sparse::{extract_keypoints, extrapolate_keypoints, keypoints_to_point_prompts, MotionHistory};

const W: usize = 24;
const H: usize = 20;

fn any_mask() -> impl Strategy<Value = Mask> {
    prop::collection::vec(any::<bool>(), W * H).prop_map(|cells| Mask::from_cells(W, H, cells).unwrap())
}

/// Union of up to three rectangles, so the mask is blobby rather than speckled.
fn blob() -> impl Strategy<Value = Mask> {
    prop::collection::vec((0..W - 1, 0..H - 1, 1usize..10, 1usize..8), 1..4).prop_map(|rects| {
        Mask::from_fn(W, H, |x, y| {
            rects
                .iter()
                .any(|&(x0, y0, w, h)| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h)
        })
        .unwrap()
    })
}

fn solid_rect() -> impl Strategy<Value = Mask> {
    (0..W - 2, 0..H - 2, 2usize..12, 2usize..10).prop_map(|(x, y, w, h)| {
        Mask::rect(W, H, BBox::new(x, y, (x + w).min(W - 1), (y + h).min(H - 1))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn iou_symmetric_and_bounded(a in any_mask(), b in any_mask()) {
        let ab = iou(&a, &b).unwrap();
        prop_assert_eq!(ab, iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(ab == 1.0, a == b);
    }

    #[test]
    fn centroid_inside_bounding_box(m in blob()) {
        let c = centroid(&m).unwrap();
        let b = bounding_box(&m).unwrap();
        prop_assert!(c.x >= b.x_min as f64 && c.x <= b.x_max as f64);
        prop_assert!(c.y >= b.y_min as f64 && c.y <= b.y_max as f64);
    }

    #[test]
    fn boundary_is_foreground_and_peels(m in solid_rect()) {
        let edge = boundary_pixels(&m);
        prop_assert!(edge.iter().all(|&(x, y)| m.get(x, y)));
        let inner = Mask::from_fn(W, H, |x, y| m.get(x, y) && !edge.contains(&(x, y))).unwrap();
        prop_assert!(inner.area() < m.area());
    }

    #[test]
    fn dilation_is_monotone(m in any_mask(), r1 in 0.0f64..3.0, extra in 0.0f64..2.0) {
        let small = dilate(&m, r1);
        let large = dilate(&m, r1 + extra);
        prop_assert!(m.is_subset_of(&small));
        prop_assert!(small.is_subset_of(&large));
    }

    #[test]
    fn keypoints_follow_integer_translation(
        m in blob(), dx in -20i64..20, dy in -20i64..20, count in prop::sample::select(vec![1usize, 3, 5, 7, 9]),
    ) {
        // embed in a frame large enough that the shifted mask never clips
        let (big_w, big_h) = (W + 48, H + 48);
        let place = |ox: i64, oy: i64| {
            Mask::from_pixels(big_w, big_h, m.pixels().map(|(x, y)| ((x as i64 + 24 + ox) as usize, (y as i64 + 24 + oy) as usize))).unwrap()
        };
        let a = extract_keypoints(&place(0, 0), count, 0).unwrap();
        let b = extract_keypoints(&place(dx, dy), count, 0).unwrap();
        prop_assert_eq!(a.bbox_fallback, b.bbox_fallback);
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!((q.x - p.x - dx as f64).abs() < 1e-9 && (q.y - p.y - dy as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn extrapolation_of_a_still_object_is_identity(m in blob(), horizon in 1usize..10) {
        let kp = extract_keypoints(&m, 5, 0).unwrap();
        let mut history = MotionHistory::new(2);
        history.push(kp.clone()).unwrap();
        history.push(maskprop::sparse::KeyPointSet { frame_index: 1, ..kp.clone() }).unwrap();
        let out = extrapolate_keypoints(&history, horizon).unwrap();
        prop_assert_eq!(out.points, kp.points);
    }

    #[test]
    fn point_prompts_stay_in_frame(xs in prop::collection::vec((-100.0f64..200.0, -100.0f64..200.0), 1..9)) {
        let kp = maskprop::sparse::KeyPointSet {
            points: xs.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            frame_index: 3,
            bbox_fallback: false,
        };
        for p in keypoints_to_point_prompts(&kp, W, H) {
            prop_assert!(p.x >= 0.0 && p.y >= 0.0 && p.x <= (W - 1) as f64 && p.y <= (H - 1) as f64);
        }
    }

    #[test]
    fn zero_flow_warp_preserves_solid_masks(m in solid_rect()) {
        let flow = FlowField::uniform(W, H, 0.0, 0.0, 1).unwrap();
        prop_assert_eq!(warp_mask_forward(&m, &flow, 1).unwrap(), m);
    }

    #[test]
    fn pixel_filter_is_idempotent(values in prop::collection::vec(0.0f32..=1.0, W * H), tau in 0.0f32..=1.0) {
        let p = ProbMap::from_values(W, H, values).unwrap();
        let (once, mask) = spatial_select(&p, tau);
        let (twice, mask2) = spatial_select(&once, tau);
        prop_assert_eq!(once.values(), twice.values());
        prop_assert_eq!(mask, mask2);
    }

    #[test]
    fn confident_history_makes_selection_match_fifo(
        n in 1usize..20, capacity in 2usize..8, seed in any::<u64>(),
    ) {
        let cfg = SelectionConfig { capacity, tau_pix: 0.0, window: Some(64), ..SelectionConfig::default() };
        let frame = Frame::filled(4, 4, 0.5).unwrap();
        let prob = ProbMap::from_values(4, 4, (0..16).map(|i| 0.1 + (i as f32) * 0.05).collect()).unwrap();
        let record = |i: usize| FrameRecord {
            frame_index: i,
            prob: prob.clone(),
            appearance: frame.clone(),
            scores: FrameScores::new(0.71 + ((seed >> (i % 60)) & 7) as f64 * 0.03, 0.1).unwrap(),
        };
        let history: Vec<FrameRecord> = (0..=n).map(record).collect();
        let bank = MemoryBank::initialize(capacity, &history[0], None).unwrap();
        let stms = UpdatePolicy { temporal: true, spatial: true };
        let (a, _) = update_memory(&bank, &history, &cfg, stms, n + 1).unwrap();
        let (b, _) = update_memory(&bank, &history, &cfg, UpdatePolicy::FIFO, n + 1).unwrap();
        let sorted = |mut v: Vec<usize>| { v.sort_unstable(); v };
        prop_assert_eq!(sorted(a.frame_indices()), sorted(b.frame_indices()));
    }

    #[test]
    fn region_and_boundary_scores(a in any_mask(), b in any_mask(), t1 in 0.0f64..3.0, extra in 0.0f64..3.0) {
        prop_assert_eq!(j_score(&a, &b).unwrap(), j_score(&b, &a).unwrap());
        let f = f_score(&a, &b, t1).unwrap();
        prop_assert!((f - f_score(&b, &a, t1).unwrap()).abs() < 1e-12);
        prop_assert!(f_score(&a, &b, t1 + extra).unwrap() >= f - 1e-12);
    }
}

fn scenario_frames(name: &str) -> (Vec<Frame>, Vec<maskprop::simulator::GroundTruthRecord>) {
    let seq = generate_scenario(&scenario_by_name(name).unwrap()).unwrap();
    (seq.frames, seq.ground_truth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oracle_presence_matches_output(t in 0usize..40, tracked in any::<bool>(), seed in any::<u64>()) {
        let (frames, gt) = scenario_frames("occlusion");
        let cfg = OracleConfig { seed, ..OracleConfig::default() };
        let (out, _) = oracle_segment(&frames[t], &PromptSet::default(), &gt[t], &cfg, tracked).unwrap();
        prop_assert_eq!(out.scores.s_occ >= 0.0, !out.mask.is_empty());
    }

    #[test]
    fn hitting_prompt_never_breaks_a_success(
        t in 0usize..40, tracked in any::<bool>(), px in 0.0f64..128.0, py in 0.0f64..96.0,
    ) {
        let (frames, gt) = scenario_frames("occlusion");
        let cfg = OracleConfig::default();
        let base = PromptSet { positive_points: vec![Point::new(px, py)], ..PromptSet::default() };
        let (before, _) = oracle_segment(&frames[t], &base, &gt[t], &cfg, tracked).unwrap();
        let hit = gt[t].mask.pixels().next();
        if let Some((x, y)) = hit {
            let mut more = base.clone();
            more.positive_points.push(Point::new(x as f64, y as f64));
            let (after, _) = oracle_segment(&frames[t], &more, &gt[t], &cfg, tracked).unwrap();
            prop_assert!(before.mask.is_empty() || !after.mask.is_empty());
        }
    }

    #[test]
    fn matcher_votes_come_from_the_bank(
        picks in prop::collection::btree_set(1usize..20, 0..6), t in 20usize..40,
    ) {
        let (frames, gt) = scenario_frames("distractor");
        let record = |i: usize| FrameRecord {
            frame_index: i,
            prob: ProbMap::from_mask(&gt[i].mask, 0.9, 0.0),
            appearance: frames[i].clone(),
            scores: FrameScores::new(0.9, 0.5).unwrap(),
        };
        let first = MemoryBank::initialize(7, &record(0), None).unwrap();
        let extra: Vec<FrameRecord> = picks.iter().map(|&i| record(i)).collect();
        let bank = first.with_entries(&extra).unwrap();
        let out = Matcher::default().segment_with_bank(&frames[t], &PromptSet::default(), &bank).unwrap();
        let n = bank.len() as f32;
        for &p in out.prob.values() {
            prop_assert!(((p * n).round() - p * n).abs() < 1e-4, "prob {} not a multiple of 1/{}", p, n);
        }
        // without prompts each entry searches at most 16 px around itself
        let mut reach = Mask::new(frames[t].width(), frames[t].height()).unwrap();
        for e in bank.entries() {
            reach = reach.union(&e.mask).unwrap();
        }
        let reach = Mask::from_fn(reach.width(), reach.height(), |x, y| {
            (-16i64..=16).any(|dy| (-16i64..=16).any(|dx| reach.get_signed(x as i64 - dx, y as i64 - dy)))
        }).unwrap();
        prop_assert!(out.mask.is_subset_of(&reach));
    }
}

#[test]
fn scenarios_are_deterministic_and_start_visible() {
    for name in SUITE {
        let s = scenario_by_name(name).unwrap();
        let a = generate_scenario(&s).unwrap();
        let b = generate_scenario(&s).unwrap();
        assert_eq!(a.frames, b.frames, "{name}");
        assert_eq!(a.ground_truth, b.ground_truth, "{name}");
        assert!(!a.ground_truth[0].occluded && !a.ground_truth[0].mask.is_empty(), "{name}");
    }
}

#[test]
fn rigid_objects_keep_their_area() {
    for name in ["linear", "reappear-far", "occlusion-fast"] {
        let seq = generate_scenario(&scenario_by_name(name).unwrap()).unwrap();
        let areas: Vec<usize> = seq
            .ground_truth
            .iter()
            .filter(|g| !g.occluded)
            .map(|g| g.mask.area())
            .collect();
        // objects in these scenarios never touch the frame edge
        assert!(areas.iter().all(|&a| a == areas[0]), "{name}: {areas:?}");
    }
}
