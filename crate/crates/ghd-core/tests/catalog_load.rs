use ghd_core::catalog::load_catalog;

#[test]
fn every_entry_loads_verified() {
    let entries = load_catalog().unwrap();
    assert_eq!(entries.len(), 53);
    let bad: Vec<String> = entries
        .iter()
        .filter(|e| !e.ok())
        .map(|e| format!("{}: {}", e.id, e.quarantine.as_deref().unwrap()))
        .collect();
    assert!(bad.is_empty(), "quarantined entries:\n{}", bad.join("\n"));
}
