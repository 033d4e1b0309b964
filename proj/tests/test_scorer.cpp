#include "uie/scorer.hpp"

#include "uie/errors.hpp"
#include "uie/jsonl.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

using namespace uie;
using nlohmann::json;

namespace {

UnifiedSchema ner_schema() {
    return compile_schema(json{{"classes", {"person", "location"}}}, TaskKind::NER);
}

UnifiedSchema re_schema() {
    return compile_schema(json{{"relations", {"works_for"}}}, TaskKind::RE);
}

UnifiedSchema ee_schema() {
    return compile_schema(
        json{{"events",
              {{{"event", "attack"}, {"roles", {"attacker", "target"}}}}}},
        TaskKind::EE);
}

CanonicalRecords canon(const UnifiedSchema& schema, std::vector<ExtractionRecord> records) {
    return canonicalize(records, schema);
}

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "uiekit-scorer-tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("entity matches pair class and mention") {
    auto schema = ner_schema();
    auto gold = canon(schema, {Entity{"Ada", "person"}, Entity{"Paris", "location"}});
    auto pred = canon(schema, {Entity{"Ada", "person"}, Entity{"Ada", "location"}});
    auto counts = count_matches(pred, gold, TaskKind::NER);
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 1);
    CHECK(counts.fn == 1);
}

TEST_CASE("duplicate units intersect by multiset minimum") {
    // records dedup, but distinct events can emit the same argument unit
    auto schema = ee_schema();
    auto gold = canon(schema, {Event{"attack", "shelled", {{"attacker", "Rebels"}}},
                               Event{"attack", "bombed", {{"attacker", "Rebels"}}}});
    auto pred = canon(schema, {Event{"attack", "shelled", {{"attacker", "Rebels"}}}});

    auto counts = count_matches(pred, gold, TaskKind::EE, EventSubtask::Argument);
    CHECK(counts.tp == 1);
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 1);

    auto triple = canon(schema, {Event{"attack", "shelled", {{"attacker", "Rebels"}}},
                                 Event{"attack", "bombed", {{"attacker", "Rebels"}}},
                                 Event{"attack", "raided", {{"attacker", "Rebels"}}}});
    auto over = count_matches(triple, gold, TaskKind::EE, EventSubtask::Argument);
    CHECK(over.tp == 2);
    CHECK(over.fp == 1);
    CHECK(over.fn == 0);
}

TEST_CASE("relation matches pair the full triple") {
    auto schema = re_schema();
    auto gold = canon(schema, {Relation{"Lena", "works_for", "Siemens"}});
    auto hit = count_matches(canon(schema, {Relation{"Lena", "works_for", "Siemens"}}), gold,
                             TaskKind::RE);
    CHECK(hit.tp == 1);
    CHECK(hit.fp == 0);
    auto swapped = count_matches(canon(schema, {Relation{"Siemens", "works_for", "Lena"}}), gold,
                                 TaskKind::RE);
    CHECK(swapped.tp == 0);
    CHECK(swapped.fp == 1);
    CHECK(swapped.fn == 1);
}

TEST_CASE("event subtasks count triggers and arguments separately") {
    auto schema = ee_schema();
    auto gold = canon(schema, {Event{"attack", "shelled",
                                     {{"attacker", "Rebels"}, {"target", "garrison"}}}});
    auto pred = canon(schema, {Event{"attack", "shelled", {{"attacker", "Rebels"}}}});

    auto trig = count_matches(pred, gold, TaskKind::EE, EventSubtask::Trigger);
    CHECK(trig.tp == 1);
    CHECK(trig.fp == 0);
    CHECK(trig.fn == 0);

    auto args = count_matches(pred, gold, TaskKind::EE, EventSubtask::Argument);
    CHECK(args.tp == 1);
    CHECK(args.fp == 0);
    CHECK(args.fn == 1);

    auto wrong_trigger = canon(
        schema, {Event{"attack", "bombed", {{"attacker", "Rebels"}, {"target", "garrison"}}}});
    auto wrong_trig_counts = count_matches(wrong_trigger, gold, TaskKind::EE,
                                           EventSubtask::Trigger);
    CHECK(wrong_trig_counts.tp == 0);
    // argument units carry the event class, not the trigger
    auto wrong_trig_args = count_matches(wrong_trigger, gold, TaskKind::EE,
                                         EventSubtask::Argument);
    CHECK(wrong_trig_args.tp == 2);

    CHECK_THROWS_AS(count_matches(pred, gold, TaskKind::EE), Error);
}

TEST_CASE("micro f1 pools counts before the ratios") {
    MetricRow row = micro_f1({{3, 1, 0}, {1, 1, 2}});
    // tp 4, fp 2, fn 2: P = 4/6, R = 4/6, F1 = 2/3
    CHECK(row.tp == 4);
    CHECK(row.fp == 2);
    CHECK(row.fn == 2);
    CHECK(row.precision == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(row.recall == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(row.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_FALSE(row.degenerate);

    MetricRow empty = micro_f1({});
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);
    CHECK(empty.degenerate);

    MetricRow no_pred = micro_f1({{0, 0, 5}});
    CHECK(no_pred.precision == 0.0);
    CHECK(no_pred.f1 == 0.0);
    CHECK(no_pred.degenerate);

    MetricRow no_gold = micro_f1({{0, 3, 0}});
    CHECK(no_gold.recall == 0.0);
    CHECK(no_gold.degenerate);
}

TEST_CASE("metric rows survive the json round trip") {
    MetricRow row;
    row.dataset = "demo";
    row.task = TaskKind::EE;
    row.subtask = EventSubtask::Argument;
    row.precision = 0.75;
    row.recall = 0.6;
    row.f1 = 2 * 0.75 * 0.6 / 1.35;
    row.tp = 3;
    row.fp = 1;
    row.fn = 2;

    auto doc = report_to_json({row});
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 1);
    auto back = metric_row_from_json(doc[0]);
    CHECK(back.dataset == row.dataset);
    CHECK(back.task == row.task);
    REQUIRE(back.subtask);
    CHECK(*back.subtask == EventSubtask::Argument);
    CHECK(back.precision == doctest::Approx(row.precision));
    CHECK(back.tp == 3);
    CHECK(back.fn == 2);
    CHECK_FALSE(back.degenerate);

    MetricRow plain;
    plain.dataset = "demo";
    plain.task = TaskKind::NER;
    auto plain_doc = report_to_json({plain});
    CHECK(plain_doc[0].at("subtask") == "-");
    auto plain_back = metric_row_from_json(plain_doc[0]);
    CHECK_FALSE(plain_back.subtask);

    CHECK_THROWS_AS(metric_row_from_json(json{{"dataset", "x"}}), Error);
}

TEST_CASE("report text lists every row") {
    MetricRow a;
    a.dataset = "alpha";
    a.task = TaskKind::NER;
    a.f1 = 0.5;
    MetricRow b;
    b.dataset = "beta";
    b.task = TaskKind::EE;
    b.subtask = EventSubtask::Trigger;
    b.f1 = 0.25;
    auto text = render_report_text({a, b});
    CHECK(text.find("alpha") != std::string::npos);
    CHECK(text.find("beta") != std::string::npos);
    CHECK(text.find("NER") != std::string::npos);
    CHECK(text.find("trigger") != std::string::npos);
}

TEST_CASE("file evaluation joins predictions to gold by id") {
    auto schema = ner_schema();
    auto gold_path = temp_file("gold.jsonl");
    std::vector<CorpusRecord> corpus = {
        {"a", "Ada wrote.", schema, canon(schema, {Entity{"Ada", "person"}}), "demo", "test"},
        {"b", "Paris hosted.", schema, canon(schema, {Entity{"Paris", "location"}}), "demo",
         "test"},
        {"c", "Bo left.", schema, canon(schema, {Entity{"Bo", "person"}}), "demo", "test"},
    };
    write_corpus(gold_path, corpus);

    auto pred_path = temp_file("pred.jsonl");
    {
        JsonlWriter writer(pred_path);
        writer.write_header(formats::kPredictions);
        writer.write({{"id", "a"},
                      {"records", json::array({{{"type", "person"}, {"mention", "Ada"}}})}});
        writer.write({{"id", "b"}, {"records", json::array()}});
        writer.write({{"id", "ghost"}, {"records", json::array()}});
    }

    auto result = evaluate_files(pred_path, gold_path);
    CHECK(result.missing_predictions == 1);   // c has no prediction
    CHECK(result.unmatched_predictions == 1); // ghost has no gold
    REQUIRE(result.rows.size() == 1);
    const auto& row = result.rows[0];
    CHECK(row.dataset == "demo");
    CHECK(row.task == TaskKind::NER);
    // a scores 1 tp; b misses its location; c counts as an empty prediction
    CHECK(row.tp == 1);
    CHECK(row.fp == 0);
    CHECK(row.fn == 2);
    CHECK(row.f1 == doctest::Approx(2.0 * 1.0 / 4.0));
}

TEST_CASE("file evaluation splits event sources into two rows") {
    auto schema = ee_schema();
    auto gold_path = temp_file("gold_ee.jsonl");
    std::vector<CorpusRecord> corpus = {
        {"e1", "Rebels shelled the garrison.", schema,
         canon(schema, {Event{"attack", "shelled",
                              {{"attacker", "Rebels"}, {"target", "garrison"}}}}),
         "events", "test"},
    };
    write_corpus(gold_path, corpus);

    auto pred_path = temp_file("pred_ee.jsonl");
    {
        JsonlWriter writer(pred_path);
        writer.write_header(formats::kPredictions);
        writer.write(
            {{"id", "e1"},
             {"records", json::array({{{"event", "attack"},
                                       {"trigger", "shelled"},
                                       {"arguments", {{"attacker", "Rebels"}}}}})}});
    }

    auto result = evaluate_files(pred_path, gold_path);
    REQUIRE(result.rows.size() == 2);
    bool saw_trigger = false, saw_argument = false;
    for (const auto& row : result.rows) {
        REQUIRE(row.subtask);
        if (*row.subtask == EventSubtask::Trigger) {
            saw_trigger = true;
            CHECK(row.tp == 1);
            CHECK(row.f1 == doctest::Approx(1.0));
        } else {
            saw_argument = true;
            CHECK(row.tp == 1);
            CHECK(row.fn == 1);
        }
    }
    CHECK(saw_trigger);
    CHECK(saw_argument);
}

TEST_CASE("file evaluation accepts reasoning files as predictions") {
    auto schema = ner_schema();
    auto gold_path = temp_file("gold_mix.jsonl");
    std::vector<CorpusRecord> corpus = {
        {"a", "Ada wrote.", schema, canon(schema, {Entity{"Ada", "person"}}), "demo", "test"},
    };
    write_corpus(gold_path, corpus);

    ReasoningInstance instance{corpus[0], {}, 0, Route::Sft, {}};
    ReasoningTrace trace;
    trace.strategy = {"names", Dimension::Cognitive, 0};
    trace.cot = "saw Ada";
    trace.prediction = corpus[0].gold;
    trace.correct = true;
    instance.traces.push_back(trace);
    instance.level = 1;

    auto pred_path = temp_file("pred_mix.jsonl");
    write_reasoning(pred_path, {instance});

    auto result = evaluate_files(pred_path, gold_path);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].tp == 1);
    CHECK(result.rows[0].f1 == doctest::Approx(1.0));
    CHECK(result.missing_predictions == 0);
}

TEST_CASE("task filter drops foreign corpus records") {
    auto ner = ner_schema();
    auto re = re_schema();
    auto gold_path = temp_file("gold_filter.jsonl");
    std::vector<CorpusRecord> corpus = {
        {"n1", "Ada wrote.", ner, canon(ner, {Entity{"Ada", "person"}}), "demo", "test"},
        {"r1", "Lena joined Siemens.", re,
         canon(re, {Relation{"Lena", "works_for", "Siemens"}}), "demo", "test"},
    };
    write_corpus(gold_path, corpus);

    auto pred_path = temp_file("pred_filter.jsonl");
    {
        JsonlWriter writer(pred_path);
        writer.write_header(formats::kPredictions);
        writer.write({{"id", "n1"},
                      {"records", json::array({{{"type", "person"}, {"mention", "Ada"}}})}});
    }

    auto filtered = evaluate_files(pred_path, gold_path, TaskKind::NER);
    REQUIRE(filtered.rows.size() == 1);
    CHECK(filtered.rows[0].task == TaskKind::NER);
    CHECK(filtered.missing_predictions == 0); // the RE record is out of scope

    auto unfiltered = evaluate_files(pred_path, gold_path);
    CHECK(unfiltered.rows.size() == 2);
    CHECK(unfiltered.missing_predictions == 1);
}
