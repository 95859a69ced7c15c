//! Line-oriented knowledge base files.
//!
//! ```text
//! # comment
//! type <individual> <ConceptName>
//! role <subject> <roleName> <object>
//! subclass <SubConcept> <SuperConcept>
//! data <individual> <dataProperty> <value>    (ignored, with a warning)
//! ```

use std::path::Path;

use super::{KbBuilder, KbError, KbWarning, KnowledgeBase};
use crate::syntax::is_ident_char;

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, KbError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io { path: path.to_path_buf(), source })?;
    parse_kb(&text)
}

fn check_name(name: &str, line: usize) -> Result<&str, KbError> {
    let keyword = matches!(name, "not" | "and" | "or" | "some" | "only" | "Thing" | "Nothing");
    if keyword || !name.chars().all(is_ident_char) {
        return Err(KbError::Format { line, message: format!("`{name}` is not a valid concept or role name") });
    }
    Ok(name)
}

pub fn parse_kb(text: &str) -> Result<KnowledgeBase, KbError> {
    let mut builder = KbBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().take_while(|t| !t.starts_with('#')).collect();
        let Some((&directive, args)) = fields.split_first() else {
            continue;
        };
        let arity = |n: usize| -> Result<(), KbError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(KbError::Format {
                    line,
                    message: format!("`{directive}` expects {n} arguments, found {}", args.len()),
                })
            }
        };
        match directive {
            "type" => {
                arity(2)?;
                builder.add_type(args[0], check_name(args[1], line)?);
            }
            "role" => {
                arity(3)?;
                builder.add_role(args[0], check_name(args[1], line)?, args[2]);
            }
            "subclass" => {
                arity(2)?;
                builder.add_subclass(check_name(args[0], line)?, check_name(args[1], line)?);
            }
            "data" => {
                log::warn!("line {line}: data property assertion ignored");
                builder.warn(KbWarning::IgnoredDataProperty { line });
            }
            other => {
                return Err(KbError::Format { line, message: format!("unknown directive `{other}`") });
            }
        }
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_line_file() {
        let kb = parse_kb("type a Male\ntype b Female\nrole a hasChild c\n").unwrap();
        assert_eq!(kb.num_individuals(), 3);
        assert_eq!(kb.signature().num_concepts(), 2);
        assert_eq!(kb.signature().num_roles(), 1);
        assert_eq!(kb.individuals().iter().map(|s| &**s).collect::<Vec<_>>(), vec!["a", "b", "c"]);
    }

    #[test]
    fn subclass_lines_are_closed_over() {
        let kb = parse_kb("type a Male\ntype b Female\nsubclass Male Person\n").unwrap();
        let male = kb.concept_members("Male").unwrap();
        assert!(male.is_subset(kb.concept_members("Person").unwrap()));
    }

    #[test]
    fn empty_and_comment_only_files_are_rejected() {
        for text in ["", "# nothing here\n\n"] {
            let err = parse_kb(text).unwrap_err();
            assert_eq!(err.to_string(), "line 0: empty knowledge base");
        }
    }

    #[test]
    fn comments_and_data_lines() {
        let kb = parse_kb("# family\ntype a Male # trailing\ndata a age 42\n").unwrap();
        assert_eq!(kb.num_individuals(), 1);
        assert_eq!(kb.warnings(), &[KbWarning::IgnoredDataProperty { line: 3 }]);
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        assert!(matches!(parse_kb("type a Male\nrole a b\n"), Err(KbError::Format { line: 2, .. })));
        assert!(matches!(parse_kb("type a Male\nfoo a b\n"), Err(KbError::Format { line: 2, .. })));
        assert!(matches!(parse_kb("type a some\n"), Err(KbError::Format { line: 1, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_kb("/definitely/not/here.kb"), Err(KbError::Io { .. })));
    }
}
