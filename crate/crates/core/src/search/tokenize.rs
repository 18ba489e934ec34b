/// Split text into lowercase alphanumeric runs.
///
/// Every non-alphanumeric character is a separator. There is no stemming and
/// no stopword list, so `"The THE the"` yields three `"the"` tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|run| !run.is_empty()).map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  -- !! ").is_empty());
    }

    #[test]
    fn punctuation_separates() {
        assert_eq!(tokenize("French-Revolution, 1789!"), ["french", "revolution", "1789"]);
    }

    #[test]
    fn no_stopwords() {
        assert_eq!(tokenize("The THE the"), ["the", "the", "the"]);
    }

    #[test]
    fn unicode_letters_are_kept() {
        assert_eq!(tokenize("Révolution FRANÇAISE—Œuvres"), ["révolution", "française", "œuvres"]);
        assert_eq!(tokenize("Métis_Nation"), ["métis", "nation"]);
    }
}
