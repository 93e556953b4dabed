#pragma once

#include "denolab/autoencoder.hpp"
#include "denolab/binary_io.hpp"
#include "denolab/conv1d.hpp"
#include "denolab/error.hpp"
#include "denolab/experiment.hpp"
#include "denolab/features.hpp"
#include "denolab/indicators.hpp"
#include "denolab/labeling.hpp"
#include "denolab/market_data.hpp"
#include "denolab/matrix.hpp"
#include "denolab/metrics.hpp"
#include "denolab/report.hpp"
#include "denolab/svm.hpp"
#include "denolab/synthetic.hpp"
#include "denolab/util.hpp"
