#![no_main]

use citylogic::sim::EpisodeLog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(log) = EpisodeLog::from_jsonl(text) {
        let back = EpisodeLog::from_jsonl(&log.to_jsonl()).unwrap();
        assert_eq!(back.hash(), log.hash());
    }
});
