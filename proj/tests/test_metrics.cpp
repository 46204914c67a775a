#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace lcb;
using lcbtest::TempDir;

namespace {

EpochRecord warm(int e) {
    EpochRecord r;
    r.epoch = e;
    r.loss_x = 1.25;
    r.test_acc = 0.5;
    return r;
}

EpochRecord selecting(int e, std::optional<RecoEvent> reco = std::nullopt) {
    EpochRecord r = warm(e);
    r.loss_u = 0.03;
    r.loss_reg = 0.001;
    r.clean_size_net1 = 10;
    r.clean_size_net2 = 13;
    r.auc_net1 = 0.91;
    r.auc_net2 = 0.875;
    r.reco = reco;
    return r;
}

/// Net that always predicts class `c` with probability ~1.
Mlp constant_net(int dim, int classes, int c) {
    Mlp net({dim, classes});
    for (int k = 0; k < classes; ++k) net.layers()[0].bias[static_cast<std::size_t>(k)] = k == c ? 50.0 : 0.0;
    return net;
}

}  // namespace

TEST_CASE("record formatting", "[metrics]") {
    CHECK(format_record(warm(1)) == "1,1.25,0,0,,,,,,0.5,,,");
    CHECK(format_record(selecting(7)) == "7,1.25,0.03,0.001,10,13,11.5,0.91,0.875,0.5,,,");
    CHECK(format_record(selecting(8, RecoEvent{8, 0.8, 0, std::nullopt})) ==
          "8,1.25,0.03,0.001,10,13,11.5,0.91,0.875,0.5,0.8,0,NA");
}

TEST_CASE("metrics file round-trips", "[metrics]") {
    TempDir dir;
    const std::vector<EpochRecord> recs{warm(1), selecting(2), selecting(3, RecoEvent{3, 0.9, 41, 0.975}),
                                        selecting(4, RecoEvent{4, 0.9, 0, std::nullopt})};
    {
        MetricsSink sink(dir.file("m.csv"));
        for (const auto& r : recs) sink.emit(r);
        CHECK_THROWS_AS(sink.emit(warm(2)), ArgumentError);
    }
    const std::string text = lcbtest::read_file(dir.file("m.csv"));
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(text.rfind(kMetricsHeader, 0) == 0);
    CHECK(read_metrics_csv(dir.file("m.csv")) == recs);
}

TEST_CASE("two records give two rows after the header", "[metrics]") {
    TempDir dir;
    {
        MetricsSink sink(dir.file("two.csv"));
        sink.emit(warm(1));
        sink.emit(warm(2));
    }
    std::istringstream in(lcbtest::read_file(dir.file("two.csv")));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == kMetricsHeader);
    CHECK(lines[2].substr(lines[2].size() - 3) == ",,,");
}

TEST_CASE("bad metrics files are rejected", "[metrics]") {
    TempDir dir;
    lcbtest::write_file(dir.file("bad.csv"), std::string(kMetricsHeader) + "\n1,2,3\n");
    CHECK_THROWS_AS(read_metrics_csv(dir.file("bad.csv")), ParseError);
    lcbtest::write_file(dir.file("hdr.csv"), "epoch,acc\n");
    CHECK_THROWS_AS(read_metrics_csv(dir.file("hdr.csv")), ParseError);
}

TEST_CASE("accuracy agrees with a direct recount", "[metrics]") {
    std::mt19937_64 rng(8);
    Mlp a = Mlp::glorot({3, 6, 3}, 1), b = Mlp::glorot({3, 6, 3}, 2);
    LabeledDataset ds = make_blobs(3, 40, 3, 2.0, 1.0, 5);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto pa = a.forward(ds.feature(i)), pb = b.forward(ds.feature(i));
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (pa[c] + pb[c] > pa[best] + pb[best]) best = c;
        hits += best == eval::true_label(ds, i) ? 1 : 0;
    }
    CHECK(accuracy(a, b, ds, LabelChannelKind::True) == static_cast<double>(hits) / ds.size());
    CHECK_THROWS_AS(accuracy(a, b, ds, LabelChannelKind::Corrected), ArgumentError);
}

TEST_CASE("constant predictors score 1/C on balanced data", "[metrics]") {
    LabeledDataset ds = make_blobs(4, 30, 2, 2.0, 1.0, 3);
    Mlp c2 = constant_net(2, 4, 2);
    CHECK(accuracy(c2, c2, ds, LabelChannelKind::True) == 0.25);
    CHECK_THROWS_AS(accuracy_of(Matrix(0, 2), std::vector<int>{}), ArgumentError);
}

TEST_CASE("relabel export", "[metrics]") {
    // Feature 0 decides the class; the net is confident and right.
    Matrix x(0, 1);
    for (double v : {-3.0, -2.0, 2.0, 3.0}) x.append_row(std::vector<double>{v});
    LabeledDataset ds(x, {0, 0, 1, 1}, {1, 0, 0, 1}, 2);
    Mlp perfect({1, 2});
    perfect.layers()[0].weights(0, 0) = -20.0;
    perfect.layers()[0].weights(1, 0) = 20.0;
    RelabelResult r = relabel_export(perfect, perfect, ds, 0.0);
    CHECK(*r.precision == 1.0);
    CHECK(std::ranges::equal(r.relabeled.observed_labels(), eval::true_labels(ds)));

    Mlp uniform({1, 2});
    RelabelResult none = relabel_export(uniform, uniform, ds, 0.8);
    CHECK(none.corrected.relabeled_ids.empty());
    CHECK_FALSE(none.precision);
    CHECK(std::ranges::equal(none.relabeled.observed_labels(), ds.observed_labels()));
}
