#pragma once

#include <cstddef>
#include <vector>

namespace rescast {

struct FitReport {
    double train_seconds = 0.0;     // wall clock around the fit only
    double ridge_residual_norm = 0.0;
    std::size_t effective_samples = 0;
    std::vector<double> loss_history;  // LSTM only: MSE at the start of each epoch
    double final_loss = 0.0;           // LSTM only: MSE after the last epoch
};

}  // namespace rescast
