use quadmpc::bench::{run_bench, BenchRow, Protocol};
use quadmpc::ProtocolParams;

#[test]
fn aa_row_matches_reference_and_sync_is_slower() {
    let row = run_bench(Protocol::Aa, 100, "wan", 1, ProtocolParams::default()).unwrap();
    assert_eq!(row.payload_bytes, (6 + 200) * 8);
    assert_eq!(row.reference_bits, Some((6 + 200) * 64));
    assert_eq!(row.phases, 2);
    assert_eq!(row.sync_phases, Some(4));
    assert_eq!(row.sync_payload_bytes, Some(row.payload_bytes));
    assert!(row.virtual_secs < row.sync_virtual_secs.unwrap());
}

#[test]
fn mult_row_reports_measured_and_reference_bits() {
    let row = run_bench(Protocol::Mult, 1, "lan", 2, ProtocolParams::default()).unwrap();
    assert_eq!(row.reference_bits, Some(4 * 64));
    assert_eq!(row.payload_bits, 6 * 64);
    assert_eq!(row.phases, 2);
}

#[test]
fn every_protocol_runs() {
    for p in Protocol::ALL {
        let row = run_bench(p, 4, "lan", 3, ProtocolParams::default()).unwrap();
        assert!(row.payload_bytes > 0 && row.phases > 0, "{p}");
        assert_eq!(row.csv().split(',').count(), BenchRow::CSV_HEADER.split(',').count());
    }
    assert!("nope".parse::<Protocol>().is_err());
}
