#ifndef COVDEN_COVDEN_HPP
#define COVDEN_COVDEN_HPP

#include "covden/backtest.hpp"
#include "covden/data.hpp"
#include "covden/error.hpp"
#include "covden/estimators.hpp"
#include "covden/evaluation.hpp"
#include "covden/io.hpp"
#include "covden/linkage.hpp"
#include "covden/models.hpp"
#include "covden/nn/conv.hpp"
#include "covden/nn/denoiser.hpp"
#include "covden/nn/training.hpp"
#include "covden/nn/training_set.hpp"
#include "covden/nn/weights_io.hpp"
#include "covden/pipeline.hpp"
#include "covden/portfolio.hpp"
#include "covden/random.hpp"
#include "covden/spectral.hpp"
#include "covden/types.hpp"

#endif  // COVDEN_COVDEN_HPP
