//! Surface language: tokens, syntax tree, parser and canonical formatter.
//!
//! Scripts hold class definitions, realizations, views, queries and group
//! commands:
//!
//! ```text
//! CREATE CLASS Shipment
//! {
//!   No INTEGER;
//!   WareFrom Warehouse;
//!   Items SET OF { Article STRING; Pieces INTEGER; }..
//!   DoShip(ToShipDate DATETIME) BOOL;
//! }..
//! ALTER CLASS Shipment REALIZE Items AS STORED;
//! CREATE TotalsOfShippedGoods AS
//!   SELECT si.Article, SUM(si.Pieces) FROM Shipment.Items si GROUP BY si.Article;
//! CALL Shipment.DoShip(#2007-05-01#) WHERE No > 10;
//! UPDATE Shipment.Items SET Pieces = Pieces + 1 WHERE Article = 'A1';
//! ```

pub mod ast;
pub mod format;
pub mod lexer;
pub mod parser;

pub use ast::*;
pub use format::{format_body_stmt, format_expr, format_kind, format_literal, format_query, format_statement};
pub use lexer::{is_keyword, tokenize, Keyword, LexError, Span, Token, TokenKind};
pub use parser::{parse_expr, parse_query, parse_script, parse_statement, ParseError, SyntaxError};
