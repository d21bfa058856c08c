use quadmpc::cost::{estimate, Plan, PricingTable, Usage};

/// GCP Plan-A training rows: (label, instances, hours, egress GB, printed $).
const ROWS: [(&str, u32, f64, f64, f64); 6] = [
    ("Cora / 4 parties", 4, 0.40, 15.96, 1.67),
    ("Cora / 3 parties", 3, 3.08, 32.35, 4.76),
    ("CiteSeer / 4 parties", 4, 0.28, 9.91, 1.06),
    ("CiteSeer / 3 parties", 3, 2.02, 22.63, 3.24),
    ("PubMed / 4 parties", 4, 0.96, 49.74, 4.88),
    ("PubMed / 3 parties", 3, 1.68, 101.37, 9.30),
];

#[test]
fn reproduces_published_training_costs() {
    let table = PricingTable::default();
    for (label, instances, hours, egress_gb, want) in ROWS {
        let u = Usage { instances, hours, egress_gb, disk_gb: 100.0 };
        let got = estimate(&u, &table, "gcp", Plan::A).unwrap();
        println!("{label}: ${got:.4} (published ${want:.2})");
        assert!((got - want).abs() <= 0.01, "{label}: {got} vs {want}");
    }
}

#[test]
fn example_rows() {
    let table = PricingTable::default();
    let u = Usage { instances: 4, hours: 0.40, egress_gb: 15.96, disk_gb: 100.0 };
    // 4·0.2338·0.40 + 15.96·0.08 + 100·0.00012
    let want = 4.0 * 0.2338 * 0.40 + 15.96 * 0.08 + 100.0 * 0.00012;
    assert_eq!(estimate(&u, &table, "GCP", Plan::A).unwrap(), want);
}
