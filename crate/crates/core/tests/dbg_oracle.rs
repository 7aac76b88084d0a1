use coordcrit_core::history::enumerate_prefixes;
use coordcrit_core::oracle::{random_table_case, run_oracle_case};

#[test]
fn dump_seed_3() {
    let case = random_table_case(3).unwrap();
    for p in enumerate_prefixes(&case.scenario) {
        let obs = case.spec.obs(&p).unwrap();
        println!("prefix {:?} fp={} obs={:?}", p.sorted_ids(), p.fingerprint(), obs);
    }
    println!("domain:");
    let d = case.spec.domain();
    for a in d.elements() {
        for b in d.elements() {
            if d.leq(a, b).unwrap() && a != b {
                println!("  {a} <= {b}");
            }
        }
    }
    let run = run_oracle_case(3).unwrap();
    println!("monotone={} exists={}", run.monotone, run.exists);
    for w in &run.verdict.witnesses {
        println!("witness h1={:?} h2={:?} o={}", w.h1.sorted_ids(), w.h2.sorted_ids(), w.outcome);
    }
    if let Some(m) = &run.search.example {
        println!("example: {:?}", m);
    }
}
