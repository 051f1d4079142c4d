//! Textual DSL for [`OrgModel`]: parsing, canonical serialization, and DOT
//! export.
//!
//! The surface syntax:
//!
//! ```text
//! org "Payroll" {
//!   operations {
//!     entity Finance ["Department"]
//!     entity HumanResources as "Human Resources" ["Department"]
//!   }
//!   service {
//!     entity Records ["Data"]
//!   }
//!   systems {
//!     entity Payroll ["Database"]
//!   }
//!   zone criticality { Finance, Records }
//!   zone sensitivity { HumanResources, Records }
//!   rel reads "reads" (Finance, Records)
//! }
//! ```
//!
//! `#` starts a line comment; whitespace is insignificant; CRLF is
//! normalized to LF before lexing. Parsing is fail-fast: the first error
//! encountered is reported with its 1-based line and column.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::org::{EntityNode, Layer, OrgModel, RelationshipEdge};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{line}:{column}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Str(s) => write!(f, "\"{s}\""),
            Token::LBrace => f.write_str("`{`"),
            Token::RBrace => f.write_str("`}`"),
            Token::LBracket => f.write_str("`[`"),
            Token::RBracket => f.write_str("`]`"),
            Token::LParen => f.write_str("`(`"),
            Token::RParen => f.write_str("`)`"),
            Token::Comma => f.write_str("`,`"),
            Token::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Spanned>, ParseError> {
    let source = source.replace("\r\n", "\n");
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = source.chars().peekable();
    while let Some(&c) = chars.peek() {
        let start_line = line;
        let start_column = column;
        let bump = |c: char, line: &mut usize, column: &mut usize| {
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        };
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                chars.next();
                bump(c, &mut line, &mut column);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    chars.next();
                    bump(c, &mut line, &mut column);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' => {
                chars.next();
                bump(c, &mut line, &mut column);
                let token = match c {
                    '{' => Token::LBrace,
                    '}' => Token::RBrace,
                    '[' => Token::LBracket,
                    ']' => Token::RBracket,
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    _ => Token::Comma,
                };
                tokens.push(Spanned {
                    token,
                    line: start_line,
                    column: start_column,
                });
            }
            '"' => {
                chars.next();
                bump(c, &mut line, &mut column);
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            bump('"', &mut line, &mut column);
                            break;
                        }
                        Some('\\') => {
                            bump('\\', &mut line, &mut column);
                            match chars.next() {
                                Some(esc @ ('"' | '\\')) => {
                                    bump(esc, &mut line, &mut column);
                                    value.push(esc);
                                }
                                Some(other) => {
                                    return Err(ParseError {
                                        line,
                                        column,
                                        expected: "escape character `\"` or `\\`".to_string(),
                                        found: format!("`{other}`"),
                                    });
                                }
                                None => {
                                    return Err(ParseError {
                                        line,
                                        column,
                                        expected: "closing `\"`".to_string(),
                                        found: "end of input".to_string(),
                                    });
                                }
                            }
                        }
                        Some(other) => {
                            bump(other, &mut line, &mut column);
                            value.push(other);
                        }
                        None => {
                            return Err(ParseError {
                                line,
                                column,
                                expected: "closing `\"`".to_string(),
                                found: "end of input".to_string(),
                            });
                        }
                    }
                }
                tokens.push(Spanned {
                    token: Token::Str(value),
                    line: start_line,
                    column: start_column,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                        ident.push(c);
                        chars.next();
                        bump(c, &mut line, &mut column);
                    } else {
                        break;
                    }
                }
                tokens.push(Spanned {
                    token: Token::Ident(ident),
                    line: start_line,
                    column: start_column,
                });
            }
            other => {
                return Err(ParseError {
                    line,
                    column,
                    expected: "token".to_string(),
                    found: format!("`{other}`"),
                });
            }
        }
    }
    tokens.push(Spanned {
        token: Token::Eof,
        line,
        column,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let spanned = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        spanned
    }

    fn error(&self, expected: &str) -> ParseError {
        let spanned = self.peek();
        ParseError {
            line: spanned.line,
            column: spanned.column,
            expected: expected.to_string(),
            found: spanned.token.to_string(),
        }
    }

    fn expect_token(&mut self, token: Token, expected: &str) -> Result<(), ParseError> {
        if self.peek().token == token {
            self.advance();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match &self.peek().token {
            Token::Ident(name) => {
                let name = name.clone();
                self.advance();
                Ok(name)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expect_string(&mut self, expected: &str) -> Result<String, ParseError> {
        match &self.peek().token {
            Token::Str(value) => {
                let value = value.clone();
                self.advance();
                Ok(value)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match &self.peek().token {
            Token::Ident(name) if name == word => {
                self.advance();
                Ok(())
            }
            _ => Err(self.error(&format!("keyword `{word}`"))),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().token, Token::Ident(name) if name == word)
    }

    fn parse_org(&mut self) -> Result<OrgModel, ParseError> {
        // An empty source is a legal, empty model.
        if self.peek().token == Token::Eof {
            return Ok(OrgModel::default());
        }
        self.keyword("org")?;
        let name = self.expect_string("organization name string")?;
        self.expect_token(Token::LBrace, "`{`")?;
        let mut model = OrgModel {
            name,
            ..OrgModel::default()
        };
        loop {
            let layer = if self.at_keyword("operations") {
                Some(Layer::Operations)
            } else if self.at_keyword("service") {
                Some(Layer::Service)
            } else if self.at_keyword("systems") {
                Some(Layer::Systems)
            } else {
                None
            };
            let Some(layer) = layer else { break };
            self.advance();
            self.expect_token(Token::LBrace, "`{`")?;
            while self.at_keyword("entity") {
                model.entities.push(self.parse_entity(layer)?);
            }
            self.expect_token(Token::RBrace, "`}` or keyword `entity`")?;
        }
        while self.at_keyword("zone") {
            self.advance();
            let members = if self.at_keyword("criticality") {
                self.advance();
                &mut model.zones.criticality_members
            } else if self.at_keyword("sensitivity") {
                self.advance();
                &mut model.zones.sensitivity_members
            } else {
                return Err(self.error("keyword `criticality` or `sensitivity`"));
            };
            self.expect_token(Token::LBrace, "`{`")?;
            loop {
                let id = match &self.peek().token {
                    Token::Ident(_) => self.expect_ident("entity id")?,
                    _ => return Err(self.error("entity id")),
                };
                members.insert(id);
                if self.peek().token == Token::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
            self.expect_token(Token::RBrace, "`}`")?;
        }
        while self.at_keyword("rel") {
            model.relationships.push(self.parse_relationship()?);
        }
        self.expect_token(Token::RBrace, "`}` or a declaration keyword")?;
        self.expect_token(Token::Eof, "end of input")?;
        Ok(model)
    }

    fn parse_entity(&mut self, layer: Layer) -> Result<EntityNode, ParseError> {
        self.keyword("entity")?;
        let id = self.expect_ident("entity id")?;
        let display_name = if self.at_keyword("as") {
            self.advance();
            self.expect_string("display name string")?
        } else {
            id.clone()
        };
        let attributes = self.parse_attrblock()?;
        Ok(EntityNode {
            id,
            display_name,
            layer,
            attributes,
        })
    }

    fn parse_relationship(&mut self) -> Result<RelationshipEdge, ParseError> {
        self.keyword("rel")?;
        let id = self.expect_ident("relationship id")?;
        let label = self.expect_string("relationship label string")?;
        self.expect_token(Token::LParen, "`(`")?;
        let mut endpoints = vec![self.expect_ident("entity id")?];
        while self.peek().token == Token::Comma {
            self.advance();
            endpoints.push(self.expect_ident("entity id")?);
        }
        self.expect_token(Token::RParen, "`)` or `,`")?;
        if endpoints.len() < 2 {
            return Err(self.error("at least two relationship endpoints"));
        }
        let attributes = self.parse_attrblock()?;
        Ok(RelationshipEdge {
            id,
            label,
            endpoints,
            attributes,
        })
    }

    fn parse_attrblock(&mut self) -> Result<Vec<String>, ParseError> {
        if self.peek().token != Token::LBracket {
            return Ok(Vec::new());
        }
        self.advance();
        let mut attributes = vec![self.expect_string("attribute string")?];
        while self.peek().token == Token::Comma {
            self.advance();
            attributes.push(self.expect_string("attribute string")?);
        }
        self.expect_token(Token::RBracket, "`]` or `,`")?;
        Ok(attributes)
    }
}

/// Parse a `.org` source text into an [`OrgModel`].
pub fn parse_org(source: &str) -> Result<OrgModel, ParseError> {
    let tokens = lex(source)?;
    Parser { tokens, pos: 0 }.parse_org()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn attr_suffix(attributes: &[String]) -> String {
    if attributes.is_empty() {
        String::new()
    } else {
        let quoted: Vec<String> = attributes.iter().map(|a| quote(a)).collect();
        format!(" [{}]", quoted.join(", "))
    }
}

/// Canonical serialization: one declaration per line, entities grouped by
/// layer and sorted by id within the group, relationships sorted by id.
/// Reparsing the output reproduces the model up to declaration order.
pub fn serialize_org(model: &OrgModel) -> String {
    let empty = model.entities.is_empty()
        && model.relationships.is_empty()
        && model.zones.criticality_members.is_empty()
        && model.zones.sensitivity_members.is_empty();
    if empty {
        return format!("org {} {{}}\n", quote(&model.name));
    }
    let mut out = format!("org {} {{\n", quote(&model.name));
    for layer in Layer::ALL {
        let mut entities = model.entities_in_layer(layer);
        if entities.is_empty() {
            continue;
        }
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        out.push_str(&format!("  {} {{\n", layer.name().to_lowercase()));
        for entity in entities {
            let alias = if entity.display_name == entity.id {
                String::new()
            } else {
                format!(" as {}", quote(&entity.display_name))
            };
            out.push_str(&format!(
                "    entity {}{}{}\n",
                entity.id,
                alias,
                attr_suffix(&entity.attributes)
            ));
        }
        out.push_str("  }\n");
    }
    for (zone, members) in [
        ("criticality", &model.zones.criticality_members),
        ("sensitivity", &model.zones.sensitivity_members),
    ] {
        if members.is_empty() {
            continue;
        }
        let ids: Vec<&str> = members.iter().map(String::as_str).collect();
        out.push_str(&format!("  zone {zone} {{ {} }}\n", ids.join(", ")));
    }
    let mut relationships: Vec<&RelationshipEdge> = model.relationships.iter().collect();
    relationships.sort_by(|a, b| a.id.cmp(&b.id));
    for rel in relationships {
        out.push_str(&format!(
            "  rel {} {} ({}){}\n",
            rel.id,
            quote(&rel.label),
            rel.endpoints.join(", "),
            attr_suffix(&rel.attributes)
        ));
    }
    out.push_str("}\n");
    out
}

/// A copy with entities sorted by (layer, id), relationships by id, used for
/// order-insensitive structural comparison after round trips.
pub fn canonicalized(model: &OrgModel) -> OrgModel {
    let mut model = model.clone();
    model
        .entities
        .sort_by(|a, b| (a.layer, &a.id).cmp(&(b.layer, &b.id)));
    model.relationships.sort_by(|a, b| a.id.cmp(&b.id));
    model
}

fn dot_fill(criticality: bool, sensitivity: bool) -> &'static str {
    match (criticality, sensitivity) {
        (true, true) => "mediumpurple1",
        (true, false) => "lightcoral",
        (false, true) => "lightblue",
        (false, false) => "white",
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render the model as a DOT digraph: entities as boxes inside one cluster
/// per layer, relationships as diamond connector nodes, attributes as
/// ellipses. Output ordering is stable so identical inputs give
/// byte-identical output.
pub fn export_dot(model: &OrgModel) -> String {
    let mut out = String::from("digraph org {\n");
    out.push_str(&format!("  label={};\n", quote(&dot_escape(&model.name))));
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    out.push_str("  edge [dir=none];\n");
    for layer in Layer::ALL {
        let mut entities = model.entities_in_layer(layer);
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        out.push_str(&format!(
            "  subgraph cluster_{} {{\n    label=\"{} ({})\";\n",
            layer.name().to_lowercase(),
            layer.name(),
            layer.index()
        ));
        for entity in entities {
            let criticality = model.zones.criticality_members.contains(&entity.id);
            let sensitivity = model.zones.sensitivity_members.contains(&entity.id);
            out.push_str(&format!(
                "    \"{}\" [shape=box, style=filled, fillcolor=\"{}\", label=\"{}\"];\n",
                dot_escape(&entity.id),
                dot_fill(criticality, sensitivity),
                dot_escape(&entity.display_name)
            ));
        }
        out.push_str("  }\n");
    }
    let mut relationships: Vec<&RelationshipEdge> = model.relationships.iter().collect();
    relationships.sort_by(|a, b| a.id.cmp(&b.id));
    for rel in relationships {
        let node = format!("rel.{}", rel.id);
        out.push_str(&format!(
            "  \"{}\" [shape=diamond, label=\"{}\"];\n",
            dot_escape(&node),
            dot_escape(&rel.label)
        ));
        for endpoint in &rel.endpoints {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                dot_escape(&node),
                dot_escape(endpoint)
            ));
        }
        for (i, attr) in rel.attributes.iter().enumerate() {
            let attr_node = format!("attr.{}.{i}", rel.id);
            out.push_str(&format!(
                "  \"{}\" [shape=ellipse, label=\"{}\"];\n  \"{}\" -> \"{}\";\n",
                dot_escape(&attr_node),
                dot_escape(attr),
                dot_escape(&attr_node),
                dot_escape(&node)
            ));
        }
    }
    let mut entities: Vec<&EntityNode> = model.entities.iter().collect();
    entities.sort_by(|a, b| a.id.cmp(&b.id));
    for entity in entities {
        for (i, attr) in entity.attributes.iter().enumerate() {
            let attr_node = format!("attr.{}.{i}", entity.id);
            out.push_str(&format!(
                "  \"{}\" [shape=ellipse, label=\"{}\"];\n  \"{}\" -> \"{}\";\n",
                dot_escape(&attr_node),
                dot_escape(attr),
                dot_escape(&attr_node),
                dot_escape(&entity.id)
            ));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn two_entity_model() -> OrgModel {
        parse_org(
            r#"org "T" {
                operations { entity A }
                service { entity B }
                systems { entity C }
                zone criticality { A }
                zone sensitivity { A, B }
                rel link "uses" (A, B, C)
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn empty_source_is_empty_model() {
        let model = parse_org("").unwrap();
        assert!(model.entities.is_empty());
        assert!(model.relationships.is_empty());
    }

    #[test]
    fn keyword_typo_reports_position() {
        let err = parse_org("entty Finance").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 1);
        assert!(err.expected.contains("keyword"));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(parse_org("org \"oops").is_err());
    }

    #[test]
    fn multi_endpoint_relationship_preserves_order() {
        let model = two_entity_model();
        assert_eq!(model.relationships[0].endpoints, vec!["A", "B", "C"]);
        let reparsed = parse_org(&serialize_org(&model)).unwrap();
        assert_eq!(reparsed.relationships[0].endpoints, vec!["A", "B", "C"]);
    }

    #[test]
    fn serialize_empty_model_is_skeleton() {
        let model = OrgModel {
            name: "Empty".to_string(),
            ..OrgModel::default()
        };
        assert_eq!(serialize_org(&model), "org \"Empty\" {}\n");
        assert_eq!(parse_org(&serialize_org(&model)).unwrap(), model);
    }

    #[test]
    fn crlf_sources_parse_identically() {
        let unix = "org \"X\" {\n  operations {\n    entity A # c\n  }\n}\n";
        let dos = unix.replace('\n', "\r\n");
        assert_eq!(parse_org(unix).unwrap(), parse_org(&dos).unwrap());
    }

    #[test]
    fn dot_export_marks_overlap_purple() {
        let mut model = two_entity_model();
        model.zones.criticality_members =
            BTreeSet::from(["A".to_string(), "C".to_string()]);
        let dot = export_dot(&model);
        assert!(dot.contains("purple"));
        assert!(dot.contains("lightcoral"));
    }

    #[test]
    fn dot_export_of_empty_model_has_three_clusters() {
        let dot = export_dot(&OrgModel::default());
        assert_eq!(dot.matches("subgraph cluster_").count(), 3);
    }
}
