//! Randomized shipping databases and a per-object reference interpreter for
//! group commands.
//!
//! The model below never calls into the engine's evaluator or executor. It
//! walks objects one at a time in ascending Oid order and applies each
//! command the way a hand-written loop would; the engine's set-oriented
//! result must match it byte for byte once both are written as snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use rxo::snapshot;
use rxo::value::TupleSet;
use rxo::{Catalog, Database, ObjectState, Oid, Value};

pub const SCHEMA: &str = r#"
CREATE CLASS Depot { Name STRING; Cap INTEGER; }..

CREATE CLASS Shipment
{
  No INTEGER;
  Src Depot;
  Items SET OF { Article STRING; Pieces INTEGER; KEY (Article) }..
  Links SET OF { Target Shipment; }..
  Bump(d INTEGER) INTEGER;
  Prune(a STRING) BOOL;
}..

CREATE CLASS Sale EXTEND Shipment
{
  Customer STRING;
  SaleItems SET OF { Article STRING; Pieces INTEGER; Price FLOAT; }..
}..

ALTER CLASS Depot REALIZE Name AS STORED;
ALTER CLASS Depot REALIZE Cap AS STORED;
ALTER CLASS Shipment REALIZE No AS STORED;
ALTER CLASS Shipment REALIZE Src AS STORED;
ALTER CLASS Shipment REALIZE Items AS STORED;
ALTER CLASS Shipment REALIZE Links AS STORED;
ALTER CLASS Sale REALIZE Customer AS STORED;
ALTER CLASS Sale REALIZE SaleItems AS STORED;
ALTER CLASS Sale REALIZE Items AS
  SELECT Article, SUM(Pieces) FROM SaleItems GROUP BY Article;

ALTER CLASS Shipment REALIZE Bump(d INTEGER) INTEGER AS
BEGIN
  SET No := No + d;
  INSERT INTO Items VALUES ('b', d);
  RETURN No;
END;

ALTER CLASS Sale REALIZE Bump(d INTEGER) INTEGER AS
BEGIN
  SET No := No * d;
  INSERT INTO SaleItems VALUES ('b', 1, 1.5);
  RETURN No;
END;

ALTER CLASS Shipment REALIZE Prune(a STRING) BOOL AS
BEGIN
  DELETE FROM Items WHERE Article = a OR Pieces < 0;
  RETURN TRUE;
END;
"#;

const ARTICLES: [&str; 5] = ["a", "b", "c", "x", "z"];

#[derive(Debug, Clone, PartialEq)]
pub enum Obj {
    Depot {
        name: String,
        cap: i64,
    },
    Ship {
        sale: bool,
        no: i64,
        src: u64,
        /// Stored items (plain shipments only).
        items: BTreeMap<String, i64>,
        links: BTreeSet<u64>,
        customer: String,
        /// (article, pieces, price in quarters) for sales.
        sale_items: BTreeSet<(String, i64, i64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub objs: BTreeMap<u64, Obj>,
    pub next_oid: u64,
}

/// Which rows of the class's root relation a command selects. An object is
/// selected when any of its rows qualifies.
#[derive(Debug, Clone)]
pub enum ShipPred {
    All,
    NoGt(i64),
    PiecesGt(i64),
    CapLt(i64),
    NoGtAndArticle(i64, &'static str),
    LinksTo(u64),
}

#[derive(Debug, Clone)]
pub enum ItemPred {
    All,
    Article(&'static str),
    PiecesGt(i64),
}

#[derive(Debug, Clone)]
pub enum Cmd {
    Bump { class: &'static str, d: i64, pred: ShipPred },
    Prune { class: &'static str, a: &'static str, pred: ShipPred },
    AddNo { k: i64, pred: ShipPred },
    ScalePieces { m: i64, c: i64, pred: ItemPred },
    RenameArticle { to: &'static str, pred: ItemPred },
    LowerCap { k: i64, name: Option<String> },
    DoublePrice { pred: ItemPred },
    DeleteShips { class: &'static str, pred: ShipPred },
    DeleteDepots { below: i64 },
}

fn ship_pred_text(p: &ShipPred) -> String {
    match p {
        ShipPred::All => String::new(),
        ShipPred::NoGt(k) => format!(" WHERE No > {k}"),
        ShipPred::PiecesGt(k) => format!(" WHERE Items.Pieces > {k}"),
        ShipPred::CapLt(k) => format!(" WHERE Src.Cap < {k}"),
        ShipPred::NoGtAndArticle(k, a) => format!(" WHERE No > {k} AND Items.Article = '{a}'"),
        ShipPred::LinksTo(n) => format!(" WHERE Links.Target = @{n}"),
    }
}

fn item_pred_text(p: &ItemPred) -> String {
    match p {
        ItemPred::All => String::new(),
        ItemPred::Article(a) => format!(" WHERE Article = '{a}'"),
        ItemPred::PiecesGt(k) => format!(" WHERE Pieces > {k}"),
    }
}

impl Cmd {
    pub fn text(&self) -> String {
        match self {
            Cmd::Bump { class, d, pred } => format!("CALL {class}.Bump({d}){};", ship_pred_text(pred)),
            Cmd::Prune { class, a, pred } => format!("CALL {class}.Prune('{a}'){};", ship_pred_text(pred)),
            Cmd::AddNo { k, pred } => format!("UPDATE Shipment SET No = No + {k}{};", ship_pred_text(pred)),
            Cmd::ScalePieces { m, c, pred } => {
                format!("UPDATE Shipment.Items SET Pieces = Pieces * {m} + {c}{};", item_pred_text(pred))
            }
            Cmd::RenameArticle { to, pred } => {
                format!("UPDATE Shipment.Items SET Article = '{to}'{};", item_pred_text(pred))
            }
            Cmd::LowerCap { k, name } => match name {
                Some(n) => format!("UPDATE Depot SET Cap = Cap - {k} WHERE Name = '{n}';"),
                None => format!("UPDATE Depot SET Cap = Cap - {k};"),
            },
            Cmd::DoublePrice { pred } => {
                format!("UPDATE Sale.SaleItems SET Price = Price * 2.0{};", item_pred_text(pred))
            }
            Cmd::DeleteShips { class, pred } => format!("DELETE {class}{};", ship_pred_text(pred)),
            Cmd::DeleteDepots { below } => format!("DELETE Depot WHERE Cap < {below};"),
        }
    }
}

pub struct Scenario {
    pub script: String,
    pub model: Model,
    pub commands: Vec<Cmd>,
}

/// A database of at most 100 objects and a handful of commands against it.
pub fn random_scenario(rng: &mut StdRng) -> Scenario {
    let mut model = Model { objs: BTreeMap::new(), next_oid: 1 };
    let mut script = String::from(SCHEMA);
    let depots = rng.gen_range(1..=4);
    for i in 0..depots {
        let cap = rng.gen_range(-50..50);
        writeln!(script, "CREATE OBJECT Depot (Name := 'd{i}', Cap := {cap});").unwrap();
        model.objs.insert(model.next_oid, Obj::Depot { name: format!("d{i}"), cap });
        model.next_oid += 1;
    }
    let ships = rng.gen_range(0..=100 - depots);
    let mut ship_oids: Vec<u64> = Vec::new();
    for _ in 0..ships {
        let sale = rng.gen_bool(0.3);
        let no = rng.gen_range(-100..100);
        let src = rng.gen_range(1..=depots as u64);
        let links: BTreeSet<u64> = if ship_oids.is_empty() {
            BTreeSet::new()
        } else {
            (0..rng.gen_range(0..=2)).map(|_| *ship_oids.choose(rng).unwrap()).collect()
        };
        let links_lit = relation_literal(links.iter().map(|o| format!("(@{o})")));
        let oid = model.next_oid;
        if sale {
            let customer = format!("c{}", rng.gen_range(0..5));
            let sale_items: BTreeSet<(String, i64, i64)> = (0..rng.gen_range(0..=4))
                .map(|_| {
                    let a = ARTICLES[rng.gen_range(0..ARTICLES.len())].to_string();
                    (a, rng.gen_range(0..20), rng.gen_range(1..40))
                })
                .collect();
            let si_lit = relation_literal(sale_items.iter().map(|(a, p, q)| format!("('{a}', {p}, {})", quarters(*q))));
            writeln!(
                script,
                "CREATE OBJECT Sale (No := {no}, Src := @{src}, Links := {links_lit}, Customer := '{customer}', SaleItems := {si_lit});"
            )
            .unwrap();
            model.objs.insert(oid, Obj::Ship { sale, no, src, items: BTreeMap::new(), links, customer, sale_items });
        } else {
            let items: BTreeMap<String, i64> = (0..rng.gen_range(0..=4))
                .map(|_| (ARTICLES[rng.gen_range(0..ARTICLES.len())].to_string(), rng.gen_range(-5..20)))
                .collect();
            let items_lit = relation_literal(items.iter().map(|(a, p)| format!("('{a}', {p})")));
            writeln!(
                script,
                "CREATE OBJECT Shipment (No := {no}, Src := @{src}, Items := {items_lit}, Links := {links_lit});"
            )
            .unwrap();
            model.objs.insert(
                oid,
                Obj::Ship { sale, no, src, items, links, customer: String::new(), sale_items: BTreeSet::new() },
            );
        }
        ship_oids.push(oid);
        model.next_oid += 1;
    }
    let commands = (0..rng.gen_range(1..=8)).map(|_| random_command(rng, &model)).collect();
    Scenario { script, model, commands }
}

fn relation_literal(rows: impl Iterator<Item = String>) -> String {
    format!("{{{}}}", rows.collect::<Vec<_>>().join(", "))
}

fn quarters(q: i64) -> String {
    rxo::value::format_float(q as f64 / 4.0)
}

fn random_ship_pred(rng: &mut StdRng, model: &Model) -> ShipPred {
    match rng.gen_range(0..7) {
        0 | 1 => ShipPred::All,
        2 => ShipPred::NoGt(rng.gen_range(-100..100)),
        3 => ShipPred::PiecesGt(rng.gen_range(-5..20)),
        4 => ShipPred::CapLt(rng.gen_range(-50..50)),
        5 => ShipPred::NoGtAndArticle(rng.gen_range(-100..100), ARTICLES[rng.gen_range(0..ARTICLES.len())]),
        _ => ShipPred::LinksTo(rng.gen_range(1..model.next_oid.max(2))),
    }
}

fn random_item_pred(rng: &mut StdRng) -> ItemPred {
    match rng.gen_range(0..4) {
        0 => ItemPred::All,
        1 | 2 => ItemPred::Article(ARTICLES[rng.gen_range(0..ARTICLES.len())]),
        _ => ItemPred::PiecesGt(rng.gen_range(-5..20)),
    }
}

fn random_command(rng: &mut StdRng, model: &Model) -> Cmd {
    let class = if rng.gen_bool(0.7) { "Shipment" } else { "Sale" };
    match rng.gen_range(0..10) {
        0 | 1 => {
            let d = if rng.gen_bool(0.1) { i64::MAX / 2 } else { rng.gen_range(-10..10) };
            Cmd::Bump { class, d, pred: random_ship_pred(rng, model) }
        }
        2 => Cmd::Prune { class, a: ARTICLES[rng.gen_range(0..ARTICLES.len())], pred: random_ship_pred(rng, model) },
        3 => Cmd::AddNo { k: rng.gen_range(-20..20), pred: random_ship_pred(rng, model) },
        4 => {
            let m = if rng.gen_bool(0.1) { i64::MAX / 3 } else { rng.gen_range(-3..4) };
            Cmd::ScalePieces { m, c: rng.gen_range(-5..5), pred: random_item_pred(rng) }
        }
        5 => Cmd::RenameArticle { to: ARTICLES[rng.gen_range(0..ARTICLES.len())], pred: random_item_pred(rng) },
        6 => {
            let name = rng.gen_bool(0.5).then(|| format!("d{}", rng.gen_range(0..4)));
            Cmd::LowerCap { k: rng.gen_range(-10..10), name }
        }
        7 => Cmd::DoublePrice { pred: random_item_pred(rng) },
        8 => Cmd::DeleteShips { class, pred: random_ship_pred(rng, model) },
        _ => Cmd::DeleteDepots { below: rng.gen_range(-50..50) },
    }
}

/// Result of running one command through the reference loop: the new model
/// and, for method calls, the value each receiver returned.
pub type Outcome = Result<(Model, BTreeMap<u64, Value>), String>;

impl Model {
    fn is_a(&self, oid: u64, class: &str) -> bool {
        match (&self.objs[&oid], class) {
            (Obj::Depot { .. }, "Depot") => true,
            (Obj::Ship { .. }, "Shipment") => true,
            (Obj::Ship { sale, .. }, "Sale") => *sale,
            _ => false,
        }
    }

    fn extent(&self, class: &str) -> Vec<u64> {
        self.objs.keys().copied().filter(|&o| self.is_a(o, class)).collect()
    }

    /// The Items value as a reader sees it: stored for shipments, summed
    /// from the sale lines for sales.
    fn items(&self, oid: u64) -> BTreeMap<String, i64> {
        match &self.objs[&oid] {
            Obj::Ship { sale: false, items, .. } => items.clone(),
            Obj::Ship { sale: true, sale_items, .. } => {
                let mut sums = BTreeMap::new();
                for (a, p, _) in sale_items {
                    *sums.entry(a.clone()).or_insert(0) += p;
                }
                sums
            }
            Obj::Depot { .. } => BTreeMap::new(),
        }
    }

    fn ship_matches(&self, oid: u64, pred: &ShipPred) -> bool {
        let Obj::Ship { no, src, links, .. } = &self.objs[&oid] else { unreachable!() };
        match pred {
            ShipPred::All => true,
            ShipPred::NoGt(k) => no > k,
            ShipPred::PiecesGt(k) => self.items(oid).values().any(|p| p > k),
            ShipPred::CapLt(k) => matches!(&self.objs[src], Obj::Depot { cap, .. } if cap < k),
            ShipPred::NoGtAndArticle(k, a) => no > k && self.items(oid).contains_key(*a),
            ShipPred::LinksTo(n) => links.contains(n),
        }
    }

    fn targets(&self, class: &str, pred: &ShipPred) -> Vec<u64> {
        self.extent(class).into_iter().filter(|&o| self.ship_matches(o, pred)).collect()
    }

    fn holds_ref(&self, holder: u64, oid: u64) -> bool {
        match &self.objs[&holder] {
            Obj::Depot { .. } => false,
            Obj::Ship { src, links, .. } => *src == oid || links.contains(&oid),
        }
    }

    /// Deletes targets one at a time; a target still referenced by a live
    /// object stops the whole command.
    fn delete_loop(&self, targets: Vec<u64>) -> Outcome {
        let mut next = self.clone();
        for t in targets {
            if next.objs.keys().any(|&o| o != t && next.holds_ref(o, t)) {
                return Err(format!("@{t} is still referenced"));
            }
            next.objs.remove(&t);
        }
        Ok((next, BTreeMap::new()))
    }

    pub fn apply(&self, cmd: &Cmd) -> Outcome {
        let mut next = self.clone();
        let mut returned = BTreeMap::new();
        match cmd {
            Cmd::Bump { class, d, pred } => {
                for oid in self.targets(class, pred) {
                    let Some(Obj::Ship { sale, no, items, sale_items, .. }) = next.objs.get_mut(&oid) else {
                        unreachable!()
                    };
                    if *sale {
                        *no = no.checked_mul(*d).ok_or("overflow")?;
                        sale_items.insert(("b".into(), 1, 6));
                    } else {
                        *no = no.checked_add(*d).ok_or("overflow")?;
                        match items.get("b") {
                            Some(p) if p != d => return Err("key violation".into()),
                            _ => items.insert("b".into(), *d),
                        };
                    }
                    returned.insert(oid, Value::Int(*no));
                }
            }
            Cmd::Prune { class, a, pred } => {
                for oid in self.targets(class, pred) {
                    let Some(Obj::Ship { sale, items, .. }) = next.objs.get_mut(&oid) else { unreachable!() };
                    if *sale {
                        return Err("Items is not stored for a sale".into());
                    }
                    items.retain(|art, p| art != a && *p >= 0);
                    returned.insert(oid, Value::Bool(true));
                }
            }
            Cmd::AddNo { k, pred } => {
                for oid in self.targets("Shipment", pred) {
                    let Some(Obj::Ship { no, .. }) = next.objs.get_mut(&oid) else { unreachable!() };
                    *no = no.checked_add(*k).ok_or("overflow")?;
                }
            }
            Cmd::ScalePieces { pred, .. } | Cmd::RenameArticle { pred, .. } => {
                self.refuse_sale_items(pred)?;
                for oid in self.extent("Shipment") {
                    let Some(Obj::Ship { sale: false, items, .. }) = next.objs.get_mut(&oid) else { continue };
                    let mut rows: BTreeSet<(String, i64)> = BTreeSet::new();
                    for (a, p) in items.iter() {
                        if !item_matches(pred, a, *p) {
                            rows.insert((a.clone(), *p));
                            continue;
                        }
                        let row = match cmd {
                            Cmd::ScalePieces { m, c, .. } => {
                                let p = p.checked_mul(*m).and_then(|x| x.checked_add(*c)).ok_or("overflow")?;
                                (a.clone(), p)
                            }
                            Cmd::RenameArticle { to, .. } => (to.to_string(), *p),
                            _ => unreachable!(),
                        };
                        rows.insert(row);
                    }
                    let mut rebuilt = BTreeMap::new();
                    for (a, p) in rows {
                        if rebuilt.insert(a, p).is_some() {
                            return Err("key violation".into());
                        }
                    }
                    *items = rebuilt;
                }
            }
            Cmd::LowerCap { k, name } => {
                for obj in next.objs.values_mut() {
                    if let Obj::Depot { name: n, cap } = obj {
                        if name.as_ref().is_none_or(|w| w == n) {
                            *cap = cap.checked_sub(*k).ok_or("overflow")?;
                        }
                    }
                }
            }
            Cmd::DoublePrice { pred } => {
                for obj in next.objs.values_mut() {
                    if let Obj::Ship { sale: true, sale_items, .. } = obj {
                        *sale_items =
                            sale_items
                                .iter()
                                .map(|(a, p, q)| {
                                    if item_matches(pred, a, *p) {
                                        (a.clone(), *p, q * 2)
                                    } else {
                                        (a.clone(), *p, *q)
                                    }
                                })
                                .collect();
                    }
                }
            }
            Cmd::DeleteShips { class, pred } => return self.delete_loop(self.targets(class, pred)),
            Cmd::DeleteDepots { below } => {
                let targets = self
                    .objs
                    .iter()
                    .filter(|(_, o)| matches!(o, Obj::Depot { cap, .. } if cap < below))
                    .map(|(k, _)| *k)
                    .collect();
                return self.delete_loop(targets);
            }
        }
        Ok((next, returned))
    }

    /// Any selected row of a sale's computed Items makes the update illegal.
    fn refuse_sale_items(&self, pred: &ItemPred) -> Result<(), String> {
        for oid in self.extent("Sale") {
            if self.items(oid).iter().any(|(a, p)| item_matches(pred, a, *p)) {
                return Err(format!("Sale.Items of @{oid} is computed"));
            }
        }
        Ok(())
    }

    pub fn to_database(&self, catalog: &Catalog) -> Database {
        let objects = self.objs.iter().map(|(&oid, obj)| object_state(oid, obj)).collect();
        Database::from_parts(catalog.clone(), objects, self.next_oid).expect("model is a valid database")
    }

    pub fn snapshot(&self, catalog: &Catalog) -> String {
        snapshot::save(&self.to_database(catalog))
    }
}

fn item_matches(pred: &ItemPred, article: &str, pieces: i64) -> bool {
    match pred {
        ItemPred::All => true,
        ItemPred::Article(a) => article == *a,
        ItemPred::PiecesGt(k) => pieces > *k,
    }
}

fn object_state(oid: u64, obj: &Obj) -> ObjectState {
    let mut stored = BTreeMap::new();
    let class =
        match obj {
            Obj::Depot { name, cap } => {
                stored.insert("Name".to_string(), Value::Str(name.clone()));
                stored.insert("Cap".to_string(), Value::Int(*cap));
                "Depot"
            }
            Obj::Ship { sale, no, src, items, links, customer, sale_items } => {
                stored.insert("No".to_string(), Value::Int(*no));
                stored.insert("Src".to_string(), Value::Ref(Oid(*src)));
                stored.insert(
                    "Links".to_string(),
                    Value::Relation(TupleSet::from_rows(links.iter().map(|l| vec![Value::Ref(Oid(*l))]))),
                );
                if *sale {
                    stored.insert("Customer".to_string(), Value::Str(customer.clone()));
                    stored.insert(
                        "SaleItems".to_string(),
                        Value::Relation(TupleSet::from_rows(sale_items.iter().map(|(a, p, q)| {
                            vec![Value::Str(a.clone()), Value::Int(*p), Value::float(*q as f64 / 4.0)]
                        }))),
                    );
                    "Sale"
                } else {
                    stored.insert(
                        "Items".to_string(),
                        Value::Relation(TupleSet::from_rows(
                            items.iter().map(|(a, p)| vec![Value::Str(a.clone()), Value::Int(*p)]),
                        )),
                    );
                    "Shipment"
                }
            }
        };
    ObjectState { oid: Oid(oid), class: class.to_string(), stored }
}

/// Counts of what a batch of scenarios exercised.
#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub databases: usize,
    pub objects: usize,
    pub commands: usize,
    pub failed: usize,
}

/// Runs one scenario through the engine and the reference loop, comparing
/// snapshots after every command.
pub fn check_scenario(scenario: &Scenario, tally: &mut Tally) -> Result<(), String> {
    use rxo::exec::{exec_delete_objects, exec_group_call, exec_group_update};
    use rxo::lang::{parse_statement, StatementKind};

    let mut session = rxo::Session::new();
    let mut out = String::new();
    session.run_source(&scenario.script, &mut out).map_err(|e| format!("setup: {e}"))?;
    let catalog = session.database().catalog().clone();
    let mut model = scenario.model.clone();
    if session.save_snapshot() != model.snapshot(&catalog) {
        return Err("initial databases differ".into());
    }
    tally.databases += 1;
    tally.objects += model.objs.len();
    for cmd in &scenario.commands {
        let text = cmd.text();
        let before = session.save_snapshot();
        let expected = model.apply(cmd);
        let stmt = parse_statement(&text).map_err(|e| format!("{text}: {e}"))?;

        let db = session.database().clone();
        let direct = match &stmt.kind {
            StatementKind::GroupCall { class, method, args, predicate } => {
                exec_group_call(&db, class, method, args, predicate.as_ref())
            }
            StatementKind::GroupUpdate { relation, assignments, predicate } => {
                exec_group_update(&db, relation, assignments, predicate.as_ref())
            }
            StatementKind::DeleteObjects { class, predicate } => exec_delete_objects(&db, class, predicate.as_ref()),
            _ => unreachable!(),
        };
        let through_session = session.execute(&stmt);
        tally.commands += 1;
        match (&expected, &direct, &through_session) {
            (Ok((next, returned)), Ok((db, report)), Ok(_)) => {
                let want = next.snapshot(&catalog);
                if rxo::snapshot::save(db) != want || session.save_snapshot() != want {
                    return Err(format!(
                        "{text}: snapshots differ\nexpected:\n{want}\nengine:\n{}",
                        session.save_snapshot()
                    ));
                }
                if let Some(got) = &report.returned {
                    let got: BTreeMap<u64, Value> = got.iter().map(|(o, v)| (o.0, v.clone())).collect();
                    if &got != returned {
                        return Err(format!("{text}: returned {got:?}, expected {returned:?}"));
                    }
                }
                model = next.clone();
            }
            (Err(_), Err(_), Err(_)) => {
                tally.failed += 1;
                if session.save_snapshot() != before {
                    return Err(format!("{text}: failed command changed the database"));
                }
            }
            _ => {
                return Err(format!(
                    "{text}: reference loop gave {:?}, engine gave {:?}",
                    expected.as_ref().map(|_| "success"),
                    direct.as_ref().map(|_| "success"),
                ))
            }
        }
    }
    Ok(())
}
