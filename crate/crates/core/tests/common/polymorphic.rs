//! Shipments and sales sharing one polymorphic Items relation, with a
//! brute-force totals oracle.

use std::collections::BTreeMap;

use rxo::{Database, Realization, Value};

/// Shipments and the totals view, before any sale class exists.
pub const BEFORE_SALE: &str = "
CREATE CLASS Warehouse { Name STRING; }..
CREATE CLASS Shipment
{
  No INTEGER;
  WareFrom Warehouse;
  Items SET OF { Article STRING; Pieces INTEGER; }..
}..
ALTER CLASS Warehouse REALIZE Name AS STORED;
ALTER CLASS Shipment REALIZE No AS STORED;
ALTER CLASS Shipment REALIZE WareFrom AS STORED;
ALTER CLASS Shipment REALIZE Items AS STORED;

CREATE TotalsOfShippedGoods AS
SELECT si.Article, SUM(si.Pieces)
FROM Shipment.Items si
GROUP BY si.Article;

CREATE OBJECT Warehouse (Name := 'North');
CREATE OBJECT Shipment (No := 1, WareFrom := @1, Items := {('bolt', 10), ('nut', 25), ('washer', 3)});
CREATE OBJECT Shipment (No := 2, WareFrom := @1, Items := {('bolt', 5), ('screw', 40)});
";

pub const SALE_DDL: &str = "
CREATE CLASS Sale EXTEND Shipment
{
  Customer STRING;
  SaleItems SET OF { Article STRING; Pieces INTEGER; Price FLOAT; }
}
ALTER CLASS Sale REALIZE SaleItems AS STORED;
ALTER CLASS Sale REALIZE Customer AS STORED;
ALTER CLASS Sale REALIZE Items AS
SELECT Article, Sum(Pieces)
FROM SaleItems
GROUP BY Article;
";

pub const SALES: &str = "
CREATE OBJECT Sale (No := 3, WareFrom := @1, Customer := 'Acme',
  SaleItems := {('bolt', 2, 0.5), ('bolt', 3, 0.45), ('nut', 10, 0.1)});
CREATE OBJECT Sale (No := 4, WareFrom := @1, Customer := 'Bell',
  SaleItems := {('screw', 12, 0.05), ('washer', 7, 0.02), ('washer', 1, 0.03)});
CREATE OBJECT Shipment (No := 5, WareFrom := @1, Items := {('nut', 1)});
";

fn rows(v: &Value) -> Vec<Vec<Value>> {
    match v {
        Value::Relation(t) => t.rows().to_vec(),
        other => panic!("not a relation: {other}"),
    }
}

fn int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        other => panic!("not an integer: {other}"),
    }
}

fn text(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        other => panic!("not a string: {other}"),
    }
}

/// Per-article sums over every Shipment-family object, reading each
/// object's Items through the realization its own class uses. Returns the
/// totals and the number of objects that contributed.
pub fn totals_oracle(db: &Database) -> (BTreeMap<String, i64>, usize) {
    let catalog = db.catalog();
    let mut totals = BTreeMap::new();
    let mut objects = 0;
    for obj in db.objects().filter(|o| catalog.is_subclass_of(&o.class, "Shipment")) {
        let items = catalog.effective_component(&obj.class, "Items").unwrap();
        let lines: Vec<(String, i64)> = match &items.realization {
            Realization::Stored => rows(&obj.stored["Items"]).iter().map(|r| (text(&r[0]), int(&r[1]))).collect(),
            Realization::Query(_) => {
                assert_eq!(items.realized_in.as_deref(), Some("Sale"));
                let mut per_article: BTreeMap<String, i64> = BTreeMap::new();
                for r in rows(&obj.stored["SaleItems"]) {
                    *per_article.entry(text(&r[0])).or_default() += int(&r[1]);
                }
                per_article.into_iter().collect()
            }
            other => panic!("unexpected realization {other:?}"),
        };
        objects += 1;
        for (article, pieces) in lines {
            *totals.entry(article).or_default() += pieces;
        }
    }
    (totals, objects)
}

/// The view's result as article -> total.
pub fn totals_from_view(db: &Database) -> BTreeMap<String, i64> {
    let rel = rxo::query::eval_view(db, "TotalsOfShippedGoods").unwrap();
    assert_eq!(rel.attribute_names(), ["Article", "Pieces"]);
    rel.tuples.iter().map(|r| (text(&r[0]), int(&r[1]))).collect()
}
