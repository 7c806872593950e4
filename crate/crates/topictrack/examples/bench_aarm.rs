use std::time::Instant;
use topictrack::appearance::{appearance_cost_matrix, gallery_push, AppearanceConfig};
use topictrack::motion::{kf_init, MotionConfig};
use topictrack::types::{Detection, Embedding, TrackId, TrackState, Tracklet};
use topictrack::{BoundingBox, Rng};

fn main() {
    let dim = 128;
    let n_tracks = 60;
    let n_dets = 50;
    let gallery = 30;
    let mut rng = Rng::new(1);
    let cfg = AppearanceConfig { gallery_capacity: gallery, ..Default::default() };
    let mcfg = MotionConfig::default();
    let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
    let tracklets: Vec<Tracklet> = (0..n_tracks).map(|i| {
        let mut t = Tracklet {
            id: TrackId(i as u64 + 1), state: TrackState::Confirmed,
            motion: kf_init(&b, &mcfg), gallery: Default::default(),
            last_box: b, prev_box: None, motion_level: 1.0, hits: 1, misses: 0,
        };
        for _ in 0..gallery {
            gallery_push(&mut t, &Embedding::new(rng.unit_vector(dim)).unwrap(), &cfg).unwrap();
        }
        t
    }).collect();
    let dets: Vec<Detection> = (0..n_dets).map(|_| {
        Detection::new(1, b, 0.9, Some(Embedding::new(rng.unit_vector(dim)).unwrap())).unwrap()
    }).collect();

    // warmup
    let _ = appearance_cost_matrix(&tracklets, &dets, &cfg).unwrap();
    let reps = 10;
    let t0 = Instant::now();
    for _ in 0..reps {
        let _ = appearance_cost_matrix(&tracklets, &dets, &cfg).unwrap();
    }
    let el = t0.elapsed().as_secs_f64() / reps as f64;
    let pairs = n_tracks * n_dets * gallery;
    println!("matrix: {:.1} ms, {} pairs, {:.0} ns/pair", el * 1e3, pairs, el * 1e9 / pairs as f64);
}
