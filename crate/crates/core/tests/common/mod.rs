#![allow(dead_code)]

pub mod catalogs;
pub mod polymorphic;
pub mod shipping;

use std::path::PathBuf;

use rxo::Session;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap()
}

/// Runs a script in a fresh session, panicking with the statement error.
pub fn session_with(source: &str) -> (Session, String) {
    let mut s = Session::new();
    let mut out = String::new();
    if let Err(e) = s.run_source(source, &mut out) {
        panic!("{e}\noutput so far:\n{out}");
    }
    (s, out)
}

/// Queries whose output must survive a save and load unchanged.
pub const BATTERY: &[&str] = &[
    "SELECT Article, Pieces FROM TotalsOfShippedGoods;",
    "SELECT Shipment, Article, Pieces FROM Shipment.Items;",
    "SELECT s.No, s.WareFrom.Name, s.Shipped FROM Shipment s;",
    "SELECT Sale, Article, Pieces, Price FROM Sale.SaleItems;",
    "SELECT Customer, COUNT(SaleItems.Article) FROM Sale GROUP BY Customer;",
    "SELECT WareFrom.City, SUM(Items.Pieces) FROM Shipment GROUP BY WareFrom.City;",
    "SELECT Name, City FROM Warehouse WHERE City <> 'Oslo';",
    "SELECT MIN(Pieces), MAX(Article) FROM Shipment.Items;",
    "SELECT AVG(Price) FROM Sale.SaleItems WHERE Pieces >= 3;",
];

pub fn battery_output(session: &mut Session) -> Vec<String> {
    BATTERY
        .iter()
        .map(|q| {
            let mut out = String::new();
            session.run_source(q, &mut out).unwrap_or_else(|e| panic!("{q}: {e}"));
            out
        })
        .collect()
}
