// Copyright 2026 The glycopipe Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "glycopipe/glycopipe.hpp"
#include "oracles.hpp"

namespace gp = glycopipe;
using gp::data::CohortSpec;
using gp::data::ColumnType;

namespace {

std::size_t positives(const gp::data::RawTable& t) {
  std::size_t k = 0;
  for (const auto& row : t.rows) k += static_cast<std::size_t>(std::get<std::int64_t>(row.back()));
  return k;
}

}  // namespace

TEST(Cohort, EmptyCohortIsHeaderOnly) {
  CohortSpec spec;
  spec.n = 0;
  const auto t = gp::data::generate_cohort(spec);
  EXPECT_EQ(t.row_count(), 0u);
  EXPECT_EQ(t.header, gp::data::cohort_header(spec));
  const std::string text = gp::data::write_table(t);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Cohort, SameSeedSameBytes) {
  CohortSpec spec;
  spec.n = 500;
  spec.missing_rate = 0.1;
  EXPECT_EQ(gp::data::write_table(gp::data::generate_cohort(spec)),
            gp::data::write_table(gp::data::generate_cohort(spec)));
  CohortSpec other = spec;
  other.seed = spec.seed + 1;
  EXPECT_NE(gp::data::write_table(gp::data::generate_cohort(spec)),
            gp::data::write_table(gp::data::generate_cohort(other)));
}

TEST(Cohort, PositiveCountWithinBinomialInterval) {
  CohortSpec spec;
  spec.n = 10000;
  spec.seed = 42;
  const auto [lo, hi] = oracle::binomial_central_interval(spec.n, spec.prevalence, 0.001);
  const std::size_t k = positives(gp::data::generate_cohort(spec));
  EXPECT_GE(k, lo);
  EXPECT_LE(k, hi);
}

TEST(Cohort, PrevalenceWithinThreeStandardErrors) {
  CohortSpec spec;
  spec.n = 100000;
  spec.seed = 7;
  spec.series_length = 2;
  const double rate = static_cast<double>(positives(gp::data::generate_cohort(spec))) / 1e5;
  const double se = std::sqrt(spec.prevalence * (1 - spec.prevalence) / 1e5);
  EXPECT_LE(std::abs(rate - spec.prevalence), 3 * se);
}

TEST(Cohort, MissingRateAppliesToFeatureCells) {
  CohortSpec spec;
  spec.n = 4000;
  spec.missing_rate = 0.2;
  const auto t = gp::data::generate_cohort(spec);
  std::size_t nulls = 0, cells = 0;
  for (const auto& row : t.rows) {
    EXPECT_FALSE(gp::data::is_null(row.front()));
    EXPECT_FALSE(gp::data::is_null(row.back()));
    for (std::size_t j = 1; j + 1 < row.size(); ++j, ++cells) nulls += gp::data::is_null(row[j]);
  }
  EXPECT_NEAR(static_cast<double>(nulls) / static_cast<double>(cells), 0.2, 0.01);
}

TEST(Cohort, TextRoundTripIsExact) {
  CohortSpec spec;
  spec.n = 300;
  spec.missing_rate = 0.05;
  const auto t = gp::data::generate_cohort(spec);
  const auto back = gp::data::parse_table(gp::data::write_table(t));
  ASSERT_EQ(back.header, t.header);
  ASSERT_EQ(back.row_count(), t.row_count());
  const auto schema = gp::data::RecordSchema::for_cohort(spec);
  const auto a = gp::data::to_records(t, schema);
  const auto b = gp::data::to_records(back, schema);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].patient_id, b[i].patient_id);
    EXPECT_EQ(a[i].static_missing, b[i].static_missing);
    EXPECT_EQ(a[i].series_missing, b[i].series_missing);
    EXPECT_EQ(a[i].label, b[i].label);
    for (std::size_t j = 0; j < a[i].statics.size(); ++j)
      if (!a[i].static_missing[j]) EXPECT_EQ(a[i].statics[j], b[i].statics[j]);
    for (std::size_t j = 0; j < a[i].glucose_series.size(); ++j)
      if (!a[i].series_missing[j]) EXPECT_EQ(a[i].glucose_series[j], b[i].glucose_series[j]);
  }
}

TEST(Cohort, BayesScoresReachClosedFormAuc) {
  CohortSpec spec;
  spec.n = 4000;
  spec.seed = 3;
  const auto scores = gp::data::generate_bayes_scores(spec);
  const auto t = gp::data::generate_cohort(spec);
  // Mann-Whitney by direct pair counting.
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (std::get<std::int64_t>(t.rows[i].back()) != 1) continue;
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
      if (std::get<std::int64_t>(t.rows[j].back()) != 0) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  EXPECT_NEAR(wins / pairs, gp::data::bayes_auc(spec), 0.02);
}

TEST(Cohort, InvalidSpecRejected) {
  CohortSpec spec;
  spec.prevalence = 1.5;
  EXPECT_THROW(gp::data::generate_cohort(spec), gp::Error);
  spec = CohortSpec{};
  spec.missing_rate = 1.0;
  EXPECT_THROW(gp::data::generate_cohort(spec), gp::Error);
}

TEST(Table, InfersIntegerAndReal) {
  const auto t = gp::data::parse_table("a,b\n1,2.5\n");
  ASSERT_EQ(t.types.size(), 2u);
  EXPECT_EQ(t.types[0], ColumnType::integer);
  EXPECT_EQ(t.types[1], ColumnType::real);
  EXPECT_EQ(std::get<std::int64_t>(t.rows[0][0]), 1);
  EXPECT_EQ(std::get<double>(t.rows[0][1]), 2.5);
}

TEST(Table, MixedColumnWidensToText) {
  const auto t = gp::data::parse_table("a\n1\nx\n");
  EXPECT_EQ(t.types[0], ColumnType::text);
  EXPECT_EQ(std::get<std::string>(t.rows[0][0]), "1");
  EXPECT_EQ(std::get<std::string>(t.rows[1][0]), "x");
}

TEST(Table, EmptyFieldIsNull) {
  const auto t = gp::data::parse_table("a,b\n1,\n,2\n");
  EXPECT_TRUE(gp::data::is_null(t.rows[0][1]));
  EXPECT_TRUE(gp::data::is_null(t.rows[1][0]));
  EXPECT_EQ(t.types[0], ColumnType::integer);
}

TEST(Table, RaggedRowNamesRow) {
  try {
    gp::data::parse_table("a,b\n1\n");
    FAIL() << "expected an error";
  } catch (const gp::Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Table, EmptyInputRejected) { EXPECT_THROW(gp::data::parse_table(""), gp::Error); }

TEST(Table, QuotedFieldsSurviveRoundTrip) {
  gp::data::RawTable t;
  t.header = {"name", "v"};
  t.types = {ColumnType::text, ColumnType::integer};
  t.rows.push_back({std::string("a,b \"q\""), std::int64_t{3}});
  const auto back = gp::data::parse_table(gp::data::write_table(t));
  EXPECT_EQ(std::get<std::string>(back.rows[0][0]), "a,b \"q\"");
  EXPECT_EQ(std::get<std::int64_t>(back.rows[0][1]), 3);
}

TEST(Records, MissingStaticColumnNamed) {
  CohortSpec spec;
  spec.n = 5;
  auto t = gp::data::generate_cohort(spec);
  const std::size_t j = *t.find_column("bmi");
  t.header.erase(t.header.begin() + static_cast<long>(j));
  t.types.erase(t.types.begin() + static_cast<long>(j));
  for (auto& row : t.rows) row.erase(row.begin() + static_cast<long>(j));
  try {
    gp::data::to_records(t, gp::data::RecordSchema::for_cohort(spec));
    FAIL() << "expected an error";
  } catch (const gp::Error& e) {
    EXPECT_NE(std::string(e.what()).find("bmi"), std::string::npos) << e.what();
  }
}

TEST(Records, NullSeriesCellSetsMask) {
  CohortSpec spec;
  spec.n = 3;
  auto t = gp::data::generate_cohort(spec);
  t.rows[1][*t.find_column("glucose_day_3")] = std::monostate{};
  const auto recs = gp::data::to_records(t, gp::data::RecordSchema::for_cohort(spec));
  EXPECT_TRUE(recs[1].series_missing[2]);
  EXPECT_TRUE(std::isnan(recs[1].glucose_series[2]));
  EXPECT_FALSE(recs[0].series_missing[2]);
}

TEST(Records, TextInNumericColumnRejected) {
  const auto t = gp::data::parse_table("patient_id,x,glucose_day_1\nP1,abc,90\n");
  gp::data::RecordSchema schema;
  schema.static_columns = {"x"};
  schema.series_length = 1;
  EXPECT_THROW(gp::data::to_records(t, schema), gp::Error);
}
