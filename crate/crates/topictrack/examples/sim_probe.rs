use topictrack::appearance::aarm_similarity;
use topictrack::simgen::{generate, parse_scenario_config, DetSource};

fn main() {
    let cfg_text = std::fs::read_to_string(std::env::args().nth(1).unwrap()).unwrap();
    let cfg = parse_scenario_config(&cfg_text).unwrap();
    let scenario = generate(&cfg).unwrap();
    let mut same = Vec::new();
    let mut cross = Vec::new();
    // Consecutive-frame pairs by identity.
    for w in scenario.frames.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        for (da, sa) in a.detections.iter().zip(&a.sources) {
            let DetSource::Object(ia) = sa else { continue };
            for (db, sb) in b.detections.iter().zip(&b.sources) {
                let DetSource::Object(ib) = sb else { continue };
                let sim = aarm_similarity(
                    std::slice::from_ref(da.embedding.as_ref().unwrap()),
                    db.embedding.as_ref().unwrap(),
                    true,
                ).unwrap();
                if ia == ib { same.push(sim) } else { cross.push(sim) }
            }
        }
    }
    let stats = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        (v[0], v[n / 100], v[n / 10], v[n / 2], v[n * 9 / 10], v[n - 1])
    };
    let (mn, p1, p10, p50, p90, mx) = stats(&mut same);
    println!("same : min={mn:.4} p1={p1:.4} p10={p10:.4} p50={p50:.4} p90={p90:.4} max={mx:.4} n={}", same.len());
    let (mn, p1, p10, p50, p90, mx) = stats(&mut cross);
    println!("cross: min={mn:.4} p1={p1:.4} p10={p10:.4} p50={p50:.4} p90={p90:.4} max={mx:.4} n={}", cross.len());
}
