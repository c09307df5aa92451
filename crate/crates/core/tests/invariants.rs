mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::catalogs::{random_catalog, GenCatalog};
use common::shipping::{random_scenario, Cmd, Model, Obj};
use rxo::catalog::Realization;
use rxo::lang::{format_body_stmt, format_kind, parse_statement, StatementKind};
use rxo::namespace::derive_relations;
use rxo::types::ValuableType;
use rxo::{Database, Oid, Session, Value};

fn lineage(gen: &GenCatalog, mut class: usize) -> Vec<usize> {
    let mut out = vec![class];
    while let Some(p) = gen.classes[class].parent {
        out.push(p);
        class = p;
    }
    out
}

/// Realizes a random subset of components at random levels of the
/// hierarchy. Method bodies differ per level so the winner is observable.
fn random_realizations(gen: &GenCatalog, rng: &mut StdRng) -> (String, BTreeMap<(usize, String), String>) {
    let mut script = String::new();
    let mut chosen = BTreeMap::new();
    let mut k = 0;
    for (i, class) in gen.classes.iter().enumerate() {
        let methods: Vec<&String> = lineage(gen, i).iter().flat_map(|&c| &gen.classes[c].methods).collect();
        for (name, _) in gen.effective(i) {
            if rng.gen_bool(0.5) {
                script.push_str(&format!("ALTER CLASS {} REALIZE {name} AS STORED;\n", class.name));
                chosen.insert((i, name), "STORED".to_string());
            }
        }
        for m in methods {
            if rng.gen_bool(0.5) {
                k += 1;
                script.push_str(&format!("ALTER CLASS {} REALIZE {m} AS BEGIN RETURN x > {k}; END;\n", class.name));
                chosen.insert((i, m.clone()), format!("RETURN x > {k};"));
            }
        }
    }
    (script, chosen)
}

#[test]
fn nearest_realization_wins_and_subclasses_keep_parent_components() {
    for seed in 0..300u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let gen = random_catalog(&mut rng);
        let (alters, chosen) = random_realizations(&gen, &mut rng);
        let mut session = Session::new();
        let mut out = String::new();
        session.run_source(&gen.script(), &mut out).unwrap();
        let before = session.database().catalog().clone();
        let snapshot = before.clone();
        let relations_before: Vec<_> =
            gen.classes.iter().map(|c| derive_relations(&before, &c.name).unwrap()).collect();
        session.run_source(&alters, &mut out).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{alters}"));
        assert_eq!(before, snapshot, "seed {seed}: DDL changed its input catalog");

        let catalog = session.database().catalog();
        for (i, class) in gen.classes.iter().enumerate() {
            let effective = catalog.effective_components(&class.name).unwrap();
            for comp in &effective {
                let winner = lineage(&gen, i).into_iter().find(|&c| chosen.contains_key(&(c, comp.name.clone())));
                match winner {
                    None => assert_eq!(comp.realization, Realization::Unrealized, "seed {seed}"),
                    Some(c) => {
                        let want = &chosen[&(c, comp.name.clone())];
                        let got = match &comp.realization {
                            Realization::Stored => "STORED".to_string(),
                            Realization::Procedure(body) => body.iter().map(format_body_stmt).collect(),
                            other => panic!("seed {seed}: {other:?}"),
                        };
                        assert_eq!(&got, want, "seed {seed}: {}.{}", class.name, comp.name);
                        assert_eq!(comp.realized_in.as_deref(), Some(gen.classes[c].name.as_str()));
                    }
                }
            }
            if let Some(p) = class.parent {
                let parent = catalog.effective_components(&gen.classes[p].name).unwrap();
                for pc in &parent {
                    let sc = effective.iter().find(|c| c.name == pc.name).expect("inherited component");
                    assert_eq!((&sc.ty, &sc.params), (&pc.ty, &pc.params), "seed {seed}");
                }
            }
            // Realizations never change the derived namespace.
            assert_eq!(derive_relations(catalog, &class.name).unwrap(), relations_before[i], "seed {seed}");
        }
    }
}

#[test]
fn catalog_listing_rebuilds_an_equal_namespace() {
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let gen = random_catalog(&mut rng);
        let (alters, _) = random_realizations(&gen, &mut rng);
        let mut session = Session::new();
        let mut out = String::new();
        session.run_source(&format!("{}{alters}", gen.script()), &mut out).unwrap();
        let catalog = session.database().catalog();
        let mut rebuilt = Session::new();
        let listing: Vec<String> = catalog.to_statements().iter().map(format_kind).collect();
        rebuilt.run_source(&listing.join("\n"), &mut out).unwrap();
        assert_eq!(rebuilt.database().catalog(), catalog, "seed {seed}");
        for class in &gen.classes {
            assert_eq!(
                derive_relations(rebuilt.database().catalog(), &class.name).unwrap(),
                derive_relations(catalog, &class.name).unwrap()
            );
        }
    }
}

fn refs_in(v: &Value, out: &mut Vec<Oid>) {
    match v {
        Value::Ref(o) => out.push(*o),
        Value::Tuple(vs) => vs.iter().for_each(|v| refs_in(v, out)),
        Value::Relation(t) => t.iter().flatten().for_each(|v| refs_in(v, out)),
        _ => {}
    }
}

/// Referential integrity, key integrity and the extent partition.
fn check_store(db: &Database) -> Result<(), String> {
    let catalog = db.catalog();
    for obj in db.objects() {
        for (name, value) in &obj.stored {
            let mut refs = Vec::new();
            refs_in(value, &mut refs);
            if let Some(dangling) = refs.iter().find(|o| db.object(**o).is_none()) {
                return Err(format!("{}.{name} dangles to {dangling}", obj.oid));
            }
            let comp = catalog.effective_component(&obj.class, name).map_err(|e| e.to_string())?;
            if let (ValuableType::Relation(rt), Value::Relation(rows)) = (&comp.ty, value) {
                let keys = rt.key_positions();
                let distinct: BTreeSet<Vec<&Value>> =
                    rows.iter().map(|r| keys.iter().map(|&k| &r[k]).collect()).collect();
                if distinct.len() != rows.len() {
                    return Err(format!("{}.{name} breaks its key", obj.oid));
                }
            }
        }
    }
    let classes: Vec<String> = catalog.classes().map(|c| c.name.clone()).collect();
    let mut seen = BTreeSet::new();
    for class in &classes {
        for oid in db.extent(class, false).map_err(|e| e.to_string())? {
            if !seen.insert(oid) || db.class_of(oid) != Some(class.as_str()) {
                return Err(format!("{oid} is not in exactly one extent"));
            }
        }
        let deep: BTreeSet<Oid> = db.extent(class, true).map_err(|e| e.to_string())?.into_iter().collect();
        let mut union = BTreeSet::new();
        for d in catalog.descendants(class) {
            union.extend(db.extent(d, false).map_err(|e| e.to_string())?);
        }
        if deep != union {
            return Err(format!("extent of {class} is not the union of its descendants"));
        }
    }
    if seen.len() != db.len() {
        return Err("some object belongs to no extent".into());
    }
    Ok(())
}

fn select(session: &mut Session, text: &str) -> BTreeSet<Vec<Value>> {
    let StatementKind::Select(q) = parse_statement(text).unwrap().kind else { panic!("{text}") };
    let rel = rxo::query::eval_select(session.database(), &q, &rxo::EvalContext::global()).unwrap();
    rel.tuples.into_rows().into_iter().collect()
}

fn items_of(model: &Model, oid: u64) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    match &model.objs[&oid] {
        Obj::Ship { sale: false, items, .. } => out.clone_from(items),
        Obj::Ship { sale: true, sale_items, .. } => {
            for (a, p, _) in sale_items {
                *out.entry(a.clone()).or_insert(0) += p;
            }
        }
        Obj::Depot { .. } => {}
    }
    out
}

/// The polymorphic relations agree with a per-object reading of the model,
/// and each split of a path agrees with navigating it directly.
fn check_relations(session: &mut Session, model: &Model) {
    let ships: Vec<u64> = model.objs.iter().filter(|(_, o)| matches!(o, Obj::Ship { .. })).map(|(k, _)| *k).collect();

    let mut union = BTreeSet::new();
    let mut via_root = BTreeSet::new();
    let mut caps = BTreeSet::new();
    for &oid in &ships {
        let items = items_of(model, oid);
        for (a, p) in &items {
            union.insert(vec![Value::Ref(Oid(oid)), Value::Str(a.clone()), Value::Int(*p)]);
            via_root.insert(vec![Value::Ref(Oid(oid)), Value::Str(a.clone())]);
        }
        if items.is_empty() {
            via_root.insert(vec![Value::Ref(Oid(oid)), Value::Null]);
        }
        let Obj::Ship { src, .. } = &model.objs[&oid] else { unreachable!() };
        let Obj::Depot { cap, .. } = &model.objs[src] else { unreachable!() };
        caps.insert(vec![Value::Ref(Oid(oid)), Value::Int(*cap)]);
    }
    assert_eq!(select(session, "SELECT Shipment, Article, Pieces FROM Shipment.Items;"), union);
    assert_eq!(select(session, "SELECT Shipment, Items.Article FROM Shipment;"), via_root);
    assert_eq!(select(session, "SELECT Shipment, Src.Cap FROM Shipment;"), caps);

    let restricted_then_projected = select(session, "SELECT Shipment, Article FROM Shipment.Items WHERE Pieces > 3;");
    let projected: BTreeSet<Vec<Value>> = select(session, "SELECT Shipment, Article, Pieces FROM Shipment.Items;")
        .into_iter()
        .filter(|r| matches!(r[2], Value::Int(p) if p > 3))
        .map(|r| r[..2].to_vec())
        .collect();
    assert_eq!(restricted_then_projected, projected);
}

#[test]
fn store_and_relations_stay_consistent_under_commands() {
    for seed in 0..40u64 {
        let scenario = random_scenario(&mut StdRng::seed_from_u64(seed));
        let mut session = Session::new();
        let mut out = String::new();
        session.run_source(&scenario.script, &mut out).unwrap();
        let mut model = scenario.model.clone();
        check_store(session.database()).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        check_relations(&mut session, &model);
        for cmd in &scenario.commands {
            let ok = session.execute(&parse_statement(&cmd.text()).unwrap()).is_ok();
            if let Ok((next, _)) = model.apply(cmd) {
                assert!(ok, "seed {seed}: {}", cmd.text());
                model = next;
            }
            check_store(session.database()).unwrap_or_else(|e| panic!("seed {seed}: {}: {e}", cmd.text()));
            check_relations(&mut session, &model);
        }
    }
}

/// Splits `UPDATE R SET ...[ WHERE p];` into the statement head, the
/// predicate and the root class whose reference attribute names the object.
fn split_update(text: &str) -> (String, Option<String>, String) {
    let body = text.trim_end_matches(';');
    let (head, pred) = match body.split_once(" WHERE ") {
        Some((h, p)) => (h.to_string(), Some(p.to_string())),
        None => (body.to_string(), None),
    };
    let relation = head.split_whitespace().nth(1).unwrap();
    let root = relation.split('.').next().unwrap().to_string();
    (head, pred, root)
}

#[test]
fn row_local_updates_do_not_depend_on_object_order() {
    let mut compared = 0;
    for seed in 0..40u64 {
        let scenario = random_scenario(&mut StdRng::seed_from_u64(seed));
        let mut session = Session::new();
        let mut out = String::new();
        session.run_source(&scenario.script, &mut out).unwrap();
        for cmd in &scenario.commands {
            let text = cmd.text();
            let row_local = matches!(
                cmd,
                Cmd::AddNo { .. }
                    | Cmd::ScalePieces { .. }
                    | Cmd::RenameArticle { .. }
                    | Cmd::LowerCap { .. }
                    | Cmd::DoublePrice { .. }
            );
            if !row_local {
                let _ = session.execute(&parse_statement(&text).unwrap());
                continue;
            }
            let (head, pred, root) = split_update(&text);
            let mut one_by_one = session.clone();
            let mut failed = false;
            let mut oids = session.database().extent(&root, true).unwrap();
            oids.reverse();
            for oid in oids {
                let own = format!("{root} = {oid}");
                let single = match &pred {
                    Some(p) => format!("{head} WHERE ({p}) AND {own};"),
                    None => format!("{head} WHERE {own};"),
                };
                if one_by_one.execute(&parse_statement(&single).unwrap()).is_err() {
                    failed = true;
                    break;
                }
            }
            match session.execute(&parse_statement(&text).unwrap()) {
                Ok(_) => {
                    assert!(!failed, "seed {seed}: {text}: a single-object step failed");
                    assert_eq!(one_by_one.save_snapshot(), session.save_snapshot(), "seed {seed}: {text}");
                    compared += 1;
                }
                Err(_) => assert!(failed, "seed {seed}: {text}: group failed but every step succeeded"),
            }
        }
    }
    assert!(compared > 25, "{compared}");
}
