//! Translate story lines through the caching translator and build prompts.
//!
//!     cargo run --example translate_with_cache

use std::collections::HashMap;
use std::sync::Arc;

use storyframes::lang::{LangCode, SourceLang};
use storyframes::translate::{build_prompt, MockTranslationClient, Translator, WHITE_BACKGROUND};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table: HashMap<String, String> = serde_json::from_str(include_str!("../tests/fixtures/spider_table.json"))?;
    let client = Arc::new(MockTranslationClient::new(table));
    let translator = Translator::new(client.clone());
    let he: SourceLang = "he".parse()?;

    let lines: Vec<String> = include_str!("../tests/fixtures/spider_he.txt").lines().map(String::from).collect();
    let mut doubled = lines.clone();
    doubled.extend(lines.iter().cloned());
    for (line, result) in lines.iter().zip(translator.translate_all(&doubled, &he, &LangCode::english(), 4)) {
        let english = result?;
        println!("{line}\n  -> {}", build_prompt(&english, Some("children's book illustration"), None));
    }
    println!("{} lookups, {} client calls, {} cached", doubled.len(), client.calls(), translator.cache().len());

    let title = translator.translate(&storyframes::translate::TranslationRequest::to_english("העכביש", he))?;
    println!("object prompt: {}", build_prompt(&title, None, Some(WHITE_BACKGROUND)));
    Ok(())
}
