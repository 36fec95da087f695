#include "oracles.hpp"

#include "ozone/datapipe.hpp"
#include "ozone/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace ozone;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an ozone::Error");
    return ErrorCode::InvalidConfig;
}

const char* kFourColumns =
    "date,CO (mg/m3),T,P,O3\n"
    "2020-01-01,1.5,30.1,1008,40\n"
    "2020-01-02,NA,31.0,1009,42\n"
    "2020-01-03,2.5,29.5,1007,44\n";

ColumnMapping four_map() { return ColumnMapping::parse("co=CO (mg/m3),temperature=T,pressure=P,ozone=O3"); }

Dataset small_dataset(std::vector<double> col, std::vector<double> y) {
    Dataset ds;
    ds.n = col.size();
    ds.d = 1;
    ds.x = std::move(col);
    ds.y = std::move(y);
    ds.feature_names = {Role::co};
    return ds;
}

} // namespace

TEST_CASE("load_csv maps, reorders and parses cells") {
    const auto table = parse_csv(kFourColumns, four_map());
    CHECK(table.num_rows() == 3);
    CHECK(table.num_cols() == 4);
    CHECK(table.column_names() == std::vector<std::string>{"co", "temperature", "pressure", "ozone"});
    CHECK_FALSE(table.rows[1][0].has_value());
    CHECK(*table.rows[2][0] == 2.5);
    CHECK(*table.rows[0][3] == 40.0);
}

TEST_CASE("load_csv restricts to mapped columns in role order") {
    const auto table = parse_csv(kFourColumns, ColumnMapping::parse("ozone=O3,pressure=P"));
    CHECK(table.roles == std::vector<Role>{Role::pressure, Role::ozone});
    CHECK(*table.rows[0][0] == 1008.0);
}

TEST_CASE("load_csv errors") {
    CHECK(code_of([] { load_csv("/nonexistent/air.csv", ColumnMapping::identity()); }) == ErrorCode::FileNotFound);
    CHECK(code_of([] { parse_csv("", ColumnMapping::identity()); }) == ErrorCode::HeaderMissing);
    try {
        parse_csv(kFourColumns, ColumnMapping::parse("co=CO (mg/m3),ozone=o3"));
        FAIL("expected MappedColumnAbsent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MappedColumnAbsent);
        CHECK(std::string(e.what()).find("o3") != std::string::npos);
    }
    const auto path = oracle::write_file("four.csv", kFourColumns);
    CHECK(load_csv(path, four_map()).num_rows() == 3);
}

TEST_CASE("unparseable and quoted cells") {
    const auto table =
        parse_csv("co,ozone\n\"1.25\",abc\n,7\n  3 ,nan\n", ColumnMapping::parse("co=co,ozone=ozone"));
    REQUIRE(table.num_rows() == 3);
    CHECK(*table.rows[0][0] == 1.25);
    CHECK_FALSE(table.rows[0][1]);
    CHECK_FALSE(table.rows[1][0]);
    CHECK(*table.rows[2][0] == 3.0);
    CHECK_FALSE(table.rows[2][1]);
}

TEST_CASE("column mapping rejects duplicate roles and unknown roles") {
    CHECK(code_of([] { ColumnMapping::parse("co=a,co=b"); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { ColumnMapping::parse("humidity=h"); }) == ErrorCode::UnknownFeature);
    const auto m = ColumnMapping::parse("co=CO:ppm");
    CHECK(m.find(Role::co)->unit == "ppm");
}

TEST_CASE("impute policies") {
    const auto table = parse_csv(kFourColumns, four_map());

    SUBCASE("complete table is untouched") {
        const auto clean = parse_csv("co,temperature,pressure,ozone\n1,2,3,4\n5,6,7,8\n", ColumnMapping::identity());
        for (auto policy : {ImputePolicy::drop_rows, ImputePolicy::mean_impute, ImputePolicy::forward_fill,
                            ImputePolicy::automatic}) {
            const auto [out, report] = impute(clean, policy);
            CHECK(out == clean);
            CHECK(report.rows_dropped == 0);
            CHECK(std::all_of(report.cells_filled.begin(), report.cells_filled.end(), [](auto c) { return c == 0; }));
        }
    }
    SUBCASE("drop_rows") {
        const auto four = parse_csv("co,ozone\n1,1\n,2\n3,3\n4,4\n", ColumnMapping::parse("co=co,ozone=ozone"));
        const auto [out, report] = impute(four, ImputePolicy::drop_rows);
        CHECK(out.num_rows() == 3);
        CHECK(report.rows_dropped == 1);
    }
    SUBCASE("mean_impute fills with the observed mean") {
        const auto t = parse_csv("co,ozone\n1,1\nNA,2\n3,3\n", ColumnMapping::parse("co=co,ozone=ozone"));
        const auto [out, report] = impute(t, ImputePolicy::mean_impute);
        CHECK(*out.rows[1][0] == 2.0);
        CHECK(report.cells_filled[0] == 1);
        CHECK(report.to_record() == "impute rows_in=3 rows_dropped=0 filled_co=1 filled_ozone=0");
    }
    SUBCASE("forward_fill carries the previous value and drops leading gaps") {
        const auto t = parse_csv("co,ozone\nNA,1\n2,2\nNA,3\n4,4\n", ColumnMapping::parse("co=co,ozone=ozone"));
        const auto [out, report] = impute(t, ImputePolicy::forward_fill);
        REQUIRE(out.num_rows() == 3);
        CHECK(*out.rows[1][0] == 2.0);
        CHECK(report.rows_dropped == 1);
        CHECK(report.cells_filled[0] == 1);
    }
    SUBCASE("missing target rows are always dropped") {
        const auto t = parse_csv("co,ozone\n1,1\n2,NA\n3,3\n", ColumnMapping::parse("co=co,ozone=ozone"));
        for (auto policy : {ImputePolicy::mean_impute, ImputePolicy::forward_fill, ImputePolicy::automatic}) {
            const auto [out, report] = impute(t, policy);
            CHECK(out.num_rows() == 2);
            CHECK(report.rows_dropped == 1);
        }
    }
    SUBCASE("automatic: sparse gaps imputed, dense gaps dropped") {
        std::string csv = "co,temperature,ozone\n";
        for (int i = 0; i < 40; ++i) {
            csv += (i == 5 ? std::string("NA") : std::to_string(i)) + "," +
                   (i % 5 == 0 ? std::string("NA") : std::to_string(20 + i)) + "," + std::to_string(i) + "\n";
        }
        const auto t = parse_csv(csv, ColumnMapping::parse("co=co,temperature=temperature,ozone=ozone"));
        const auto [out, report] = impute(t, ImputePolicy::automatic);
        // temperature misses 20% -> rows dropped; co misses 1/32 of the rest -> mean imputed
        CHECK(out.num_rows() == 32);
        CHECK(report.cells_filled[0] == 0);  // row 5 was already dropped for temperature
        CHECK(report.cells_filled[1] == 0);
    }
    SUBCASE("errors") {
        const auto all_missing = parse_csv("co,ozone\nNA,1\nNA,2\n", ColumnMapping::parse("co=co,ozone=ozone"));
        CHECK(code_of([&] { impute(all_missing, ImputePolicy::mean_impute); }) == ErrorCode::EmptyColumn);
        CHECK(code_of([&] { impute(all_missing, ImputePolicy::drop_rows); }) == ErrorCode::AllRowsDropped);
        CHECK(code_of([&] { impute(RawTable{}, ImputePolicy::drop_rows); }) == ErrorCode::AllRowsDropped);
    }
    (void)table;
}

TEST_CASE("to_dataset projects and orders features") {
    const auto [clean, report] = impute(parse_csv(kFourColumns, four_map()), ImputePolicy::drop_rows);
    const Role only_co[] = {Role::co};
    const auto ds1 = to_dataset(clean, only_co);
    CHECK(ds1.d == 1);
    CHECK(ds1.n == 2);

    const Role order[] = {Role::temperature, Role::pressure, Role::co};
    const auto ds3 = to_dataset(clean, order);
    CHECK(ds3.d == 3);
    CHECK(ds3.feature_names == std::vector<Role>(std::begin(order), std::end(order)));
    CHECK(ds3.at(0, 0) == 30.1);
    CHECK(ds3.at(0, 1) == 1008.0);
    CHECK(ds3.at(0, 2) == 1.5);
    CHECK(ds3.y == std::vector<double>{40.0, 44.0});

    CHECK(code_of([&] { to_dataset(clean, std::span<const Role>{}); }) == ErrorCode::UnknownFeature);
    const Role dup[] = {Role::co, Role::co};
    CHECK(code_of([&] { to_dataset(clean, dup); }) == ErrorCode::UnknownFeature);
    const auto raw = parse_csv(kFourColumns, four_map());
    CHECK(code_of([&] { to_dataset(raw, only_co); }) == ErrorCode::MissingValuesPresent);
}

TEST_CASE("fit_scaler uses the n-1 sample std") {
    const auto s = fit_scaler(small_dataset({1, 2, 3}, {0, 1, 2}));
    CHECK(s.mean[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.stddev[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*s.target_mean == doctest::Approx(1.0));
    CHECK(code_of([] { fit_scaler(small_dataset({5, 5, 5}, {1, 2, 3})); }) == ErrorCode::ZeroVariance);
    CHECK(code_of([] { fit_scaler(small_dataset({0.1, 0.1, 0.1}, {1, 2, 3})); }) == ErrorCode::ZeroVariance);
    CHECK(fit_scaler(small_dataset({1, 4, 9}, {1, 2, 3})) == fit_scaler(small_dataset({1, 4, 9}, {1, 2, 3})));
    // constant target is allowed; only its std is absent
    CHECK_FALSE(fit_scaler(small_dataset({1, 2, 3}, {7, 7, 7})).target_stddev.has_value());
}

TEST_CASE("transform") {
    const auto ds = oracle::planted(200, {1, 2, 3}, 0, 1, 11);
    const auto z = transform(fit_scaler(ds), ds);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto [m, s] = oracle::mean_std(z.column(j));
        CHECK(std::fabs(static_cast<double>(m)) < 1e-9);
        CHECK(std::fabs(static_cast<double>(s) - 1.0) < 1e-9);
    }
    CHECK(z.y == ds.y);

    Scaler identity{{0, 0, 0}, {1, 1, 1}, std::nullopt, std::nullopt};
    CHECK(transform(identity, ds) == ds);

    Scaler two{{0, 0}, {1, 1}, std::nullopt, std::nullopt};
    CHECK(code_of([&] { transform(two, ds); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("split sizes, determinism and errors") {
    const auto ds = small_dataset({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto [train, test] = split(ds, SplitSpec{});
    CHECK(train.n == 8);
    CHECK(test.n == 2);

    const auto again = split(ds, SplitSpec{});
    CHECK(again.first == train);
    CHECK(again.second == test);

    const auto [ordered_train, ordered_test] = split(ds, SplitSpec{0.8, 0, false});
    CHECK(ordered_train.y == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(ordered_test.y == std::vector<double>{8, 9});

    CHECK(code_of([] { split(small_dataset({1}, {1}), SplitSpec{}); }) == ErrorCode::DegenerateSplit);
    CHECK(code_of([&] { split(ds, SplitSpec{1.0, 0, true}); }) == ErrorCode::InvalidConfig);
    // floor(2 * 0.3) = 0 is lifted to 1 train row
    const auto [t2, s2] = split(small_dataset({1, 2}, {1, 2}), SplitSpec{0.3, 0, true});
    CHECK(t2.n == 1);
    CHECK(s2.n == 1);
}

TEST_CASE("property: partition, standardization and imputation idempotence on random data") {
    ozone::Rng gen(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + gen.below(200);
        const auto ds = oracle::planted(n, {gen.normal(), gen.normal(), gen.normal()}, gen.normal(), 0.5,
                                        gen.next_u64());
        const SplitSpec spec{gen.uniform(0.05, 0.95), gen.next_u64(), gen.uniform() < 0.7};
        if (train_rows_for(n, spec.train_fraction) >= n) continue;
        const auto [train, test] = split(ds, spec);
        CHECK(train.n == train_rows_for(n, spec.train_fraction));
        CHECK(train.n + test.n == n);
        std::multiset<double> all(ds.y.begin(), ds.y.end());
        std::multiset<double> parts(train.y.begin(), train.y.end());
        parts.insert(test.y.begin(), test.y.end());
        CHECK(all == parts);

        if (n >= 3) {
            const auto z = transform(fit_scaler(ds), ds);
            for (std::size_t j = 0; j < 3; ++j) {
                const auto [m, s] = oracle::mean_std(z.column(j));
                CHECK(std::fabs(static_cast<double>(m)) < 1e-9);
                CHECK(std::fabs(static_cast<double>(s) - 1.0) < 1e-9);
            }
        }

        RawTable t;
        t.roles = {Role::co, Role::temperature, Role::pressure, Role::ozone};
        t.units.assign(4, "");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<Cell> row;
            for (std::size_t j = 0; j < 3; ++j) {
                row.push_back(gen.uniform() < 0.1 ? Cell{} : Cell{ds.at(i, j)});
            }
            row.push_back(gen.uniform() < 0.05 ? Cell{} : Cell{ds.y[i]});
            t.rows.push_back(std::move(row));
        }
        for (auto policy : {ImputePolicy::drop_rows, ImputePolicy::mean_impute, ImputePolicy::forward_fill,
                            ImputePolicy::automatic}) {
            try {
                const auto once = impute(t, policy).first;
                CHECK(impute(once, policy).first == once);
                if (policy == ImputePolicy::mean_impute) {
                    // observed mean of each feature column (after target drop) is preserved
                    for (std::size_t j = 0; j < 3; ++j) {
                        long double s = 0;
                        std::size_t c = 0;
                        for (const auto& row : t.rows) {
                            if (row[3] && row[j]) {
                                s += *row[j];
                                ++c;
                            }
                        }
                        if (c == 0) continue;
                        std::vector<double> col;
                        for (const auto& row : once.rows) col.push_back(*row[j]);
                        const auto [m, sd] = oracle::mean_std(col);
                        CHECK(std::fabs(static_cast<double>(m - s / c)) <= 1e-12 * std::max(1.0, std::fabs(double(m))));
                    }
                }
            } catch (const Error& e) {
                CHECK((e.code() == ErrorCode::AllRowsDropped || e.code() == ErrorCode::EmptyColumn));
            }
        }
    }
}
