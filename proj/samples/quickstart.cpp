// Trains MMMF and RSF on a small synthetic dataset and prints per-step test error.
#include <iostream>

#include "mmmf/data/pipeline.hpp"
#include "mmmf/eval/evaluate.hpp"
#include "mmmf/runtime.hpp"
#include "mmmf/synthetic.hpp"
#include "mmmf/train/trainer.hpp"

int main() {
    using namespace mmmf;
    tune_allocator();

    SyntheticConfig sc;
    sc.num_steps = 2000;
    sc.seed = 3;
    const auto data = prepare(generate(sc));

    nn::HyperParams hp;
    hp.recurrent.hidden = 16;

    std::vector<TrainConfig> configs;
    for (auto f : {Formulation::mmmf, Formulation::rsf}) {
        TrainConfig c;
        c.formulation = f;
        c.history = 12;
        c.k = 5;
        c.epochs = 10;
        c.batch_size = 64;
        configs.push_back(c);
    }
    const auto origins = common_test_origins(data, configs, 6);

    for (const auto& c : configs) {
        auto f = train<float>(make_model<float>(hp, data.data.specs(), c.formulation, c.seed), data, c,
                              {[](const EpochRecord& r) {
                                  std::cout << "  epoch " << r.epoch << " loss " << r.train_loss << " val " << r.val_loss << '\n';
                              }});
        EvalOptions eo;
        eo.origins = origins;
        eo.timing_repeats = 10;
        const auto report = evaluate<float>({&f}, data, eo, std::string(to_string(c.formulation)), "recurrent");
        write_summary(std::cout, {report});
    }
}
