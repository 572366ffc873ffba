"""
Predictive models that denoise single-trial responses.

A convolutional encoder with a linear readout is fitted to the single-trial
responses of the non-oracle stimuli. Its deterministic predictions, scaled
by the neuron's SNR weight and its validation correlation, replace the
noisy responses when building similarity matrices.
"""

import logging
import os

import numpy as np
import scipy.linalg

from common.errors import DatasetError, NonFiniteError
from neural.config import ENCODERS
from neural.similarity import population_similarity
from neural.snr import EPS, ScaledPopulation, center_units
from tensor import network, ops
from tensor.optim import SGD
from tensor.tape import Tape


logger = logging.getLogger(__name__)


def denoiser_network(input_shape, neurons, encoder="trained", channels=8,
                     kernel=3, pool=4):
    """
    Build the predictive network.

    With an encoder: three conv layers with a skip connection from the
    first block to the third, average pooling and a linear readout. With
    encoder "none" the readout sees the pooled pixels directly.

    Args:
        input_shape: (1, H, W)
        neurons: number of predicted responses
        encoder: one of "trained", "frozen", "none"
    """

    if encoder not in ENCODERS:
        raise ValueError("unknown encoder '{}'".format(encoder))

    if encoder == "none":
        layers = []
    else:
        layers = [
            network.conv("encoder.conv1", channels, kernel),
            network.affine("encoder.affine1"),
            network.relu("encoder.relu1"),
            network.conv("encoder.conv2", channels, kernel),
            network.affine("encoder.affine2"),
            network.relu("encoder.relu2"),
            network.conv("encoder.conv3", channels, kernel),
            network.affine("encoder.affine3"),
            network.residual_add("encoder.add", 2),
            network.relu("encoder.relu3"),
        ]

    layers += [
        network.pool("readout.pool", pool),
        network.flatten("readout.flatten"),
        network.fc("readout.fc", neurons),
    ]

    return network.NetworkGraph(layers, input_shape, [len(layers) - 2],
                                head="mse")


class PredictiveModel(object):
    """
    A fitted denoiser for one scan: the network, the per-neuron response
    normalization it was trained with and the validation correlations v_a
    """

    def __init__(self, scan, net, target_mean, target_std, correlations=None,
                 encoder="trained"):
        self.scan = scan
        self.net = net
        self.target_mean = np.asarray(target_mean, dtype=np.float64)
        self.target_std = np.asarray(target_std, dtype=np.float64)
        self.correlations = None if correlations is None else \
            np.asarray(correlations, dtype=np.float64)
        self.encoder = encoder

    @property
    def neurons(self):
        return self.target_mean.shape[0]

    def predict(self, stimuli):
        """
        Predicted responses [M, A] for stimuli [M, H, W]
        """

        images = np.asarray(stimuli, dtype=np.float32)[:, None]

        z = network.predict(self.net, images).astype(np.float64)

        return z * self.target_std + self.target_mean

    def features(self, stimuli, batch_size=256):
        """
        Readout input features [M, D] for stimuli [M, H, W]
        """

        images = np.asarray(stimuli, dtype=np.float32)[:, None]

        out = []

        for start in range(0, images.shape[0], batch_size):
            _, taps = network.forward(self.net, images[start:start + batch_size])
            out.append(taps[0].data.astype(np.float64))

        return np.concatenate(out, axis=0)

    def save(self, directory):
        """
        The response normalization goes into the index as float64 lists;
        tensor files hold float32 only
        """

        extra = {}

        if self.correlations is not None:
            extra["correlations"] = self.correlations

        network.save_checkpoint(
            self.net,
            directory,
            extra=extra,
            metadata={
                "scan": int(self.scan),
                "encoder": self.encoder,
                "target_mean": self.target_mean.tolist(),
                "target_std": self.target_std.tolist(),
            }
        )

    @classmethod
    def load(cls, directory):
        net, extra, metadata = network.load_checkpoint(directory)

        for name in ("target_mean", "target_std"):
            if name not in metadata:
                raise DatasetError("{}: not a denoiser checkpoint (no {})"
                                   .format(directory, name))

        return cls(
            metadata.get("scan", 0),
            net,
            metadata["target_mean"],
            metadata["target_std"],
            extra.get("correlations"),
            metadata.get("encoder", "trained")
        )


def response_correlations(predicted, measured, eps=EPS):
    """
    Per-neuron Pearson correlation across stimuli. Neurons whose predicted
    or measured responses don't vary get 0.

    Args:
        predicted: [M, A]
        measured: [M, A]

    Returns:
        [A] correlations
    """

    p = np.asarray(predicted, dtype=np.float64)
    m = np.asarray(measured, dtype=np.float64)

    p = p - p.mean(axis=0)
    m = m - m.mean(axis=0)

    sp = np.sqrt((p * p).mean(axis=0))
    sm = np.sqrt((m * m).mean(axis=0))

    usable = (sp >= eps) & (sm >= eps)

    v = np.zeros(p.shape[1])
    v[usable] = (p * m).mean(axis=0)[usable] / (sp[usable] * sm[usable])

    return np.clip(v, -1.0, 1.0)


def _refit_readout(model, images, targets, ridge):
    """
    Closed-form ridge regression of the readout on the encoder features;
    the bias is not penalized
    """

    f = model.features(images)
    x = np.concatenate([f, np.ones((f.shape[0], 1))], axis=1)

    penalty = ridge * f.shape[0] * np.eye(x.shape[1])
    penalty[-1, -1] = 0.0

    solution = scipy.linalg.solve(x.T @ x + penalty, x.T @ targets,
                                  assume_a="sym")

    p = model.net.parameters
    p["readout.fc.weight"].data = solution[:-1].astype(np.float32)
    p["readout.fc.bias"].data = solution[-1].astype(np.float32)


def fit_denoiser(ds, cfg):
    """
    Fit a predictive model to one scan.

    Every trial of every non-oracle stimulus is a training sample. With a
    trained encoder the whole network is first fitted by SGD on the mean
    squared error of the z-scored responses; the readout is then refitted
    in closed form. v_a is the correlation of the predictions with the
    trial-mean responses of the held-out oracle stimuli.

    Args:
        ds: ResponseDataset
        cfg: DenoiserConfig

    Returns:
        PredictiveModel
    """

    single = np.flatnonzero(~ds.oracle)
    oracle = np.flatnonzero(ds.oracle)

    if single.shape[0] == 0:
        raise DatasetError("scan {}: no non-oracle stimuli to fit the "
                           "denoiser on".format(ds.scan))

    if oracle.shape[0] < 2:
        raise DatasetError("scan {}: denoiser validation needs at least 2 "
                           "oracle stimuli".format(ds.scan))

    rows = np.repeat(single, ds.trial_counts[single])
    targets = np.concatenate([ds.trials(i) for i in single]).astype(np.float64)

    mean = targets.mean(axis=0)
    std = targets.std(axis=0)
    std[std < EPS] = 1.0

    z = (targets - mean) / std

    rng = np.random.default_rng(cfg.seed)

    h, w = ds.stimuli.shape[1:]
    net = denoiser_network((1, h, w), ds.neurons, cfg.encoder, cfg.channels,
                           cfg.kernel, cfg.pool)
    net.initialize(rng)

    model = PredictiveModel(ds.scan, net, mean, std, encoder=cfg.encoder)

    images = ds.stimuli[:, None]

    if cfg.encoder == "trained":
        optimizer = SGD(net.parameters, cfg.lr, cfg.momentum,
                        cfg.weight_decay)

        for epoch in range(cfg.epochs):
            order = rng.permutation(rows.shape[0])
            losses = []

            for step, start in enumerate(range(0, order.shape[0],
                                               cfg.batch_size)):
                batch = order[start:start + cfg.batch_size]

                with Tape(net.parameters) as tape:
                    out, _ = network.forward(net, images[rows[batch]])
                    loss = ops.mse(out, z[batch])

                    if not np.isfinite(loss.item()):
                        raise NonFiniteError(
                            "denoiser loss",
                            "scan {} epoch {} step {}".format(ds.scan, epoch,
                                                              step)
                        )

                    grads = tape.backward(loss)

                optimizer.step(grads)
                losses.append(loss.item())

            logger.info("scan %d denoiser epoch %d: mse %.4f", ds.scan,
                        epoch, float(np.mean(losses)))

    _refit_readout(model, ds.stimuli[rows], z, cfg.ridge)

    model.correlations = response_correlations(
        model.predict(ds.stimuli[oracle]),
        ds.trial_means()[oracle]
    )

    logger.info("scan %d denoiser: mean v_a %.3f over %d neurons", ds.scan,
                float(model.correlations.mean()), ds.neurons)

    return model


def model_population(predictions, weights, correlations, stimulus_ids,
                     eps=EPS):
    """
    Scaled model responses r_hat = w_a * v_a * rho_hat and their centered
    unit vectors

    Returns:
        ScaledPopulation
    """

    predictions = np.asarray(predictions, dtype=np.float64)

    scaled = predictions * (weights.weights *
                            np.asarray(correlations))[None, :]

    mean, units, valid = center_units(scaled, eps)

    if not np.all(valid):
        logger.warning("%d degenerate model responses excluded",
                       int(np.sum(~valid)))

    return ScaledPopulation(scaled, mean, units, valid,
                            np.asarray(stimulus_ids, dtype=np.int64))


def similarity_from_predictions(predictions, weights, correlations,
                                stimulus_ids, eps=EPS):
    """
    Model similarity from precomputed predictions [M, A]
    """

    pop = model_population(predictions, weights, correlations, stimulus_ids,
                           eps)

    return population_similarity(pop, "model")


def similarity_model(model, weights, stimuli, stimulus_ids=None, eps=EPS):
    """
    Model similarity S^model over the given stimuli, computed from the
    scaled predictions in the same way as the data similarity

    Args:
        model: PredictiveModel with validation correlations
        weights: SnrWeights of the scan the model was fitted on
        stimuli: [M, H, W]
        stimulus_ids: ids of the stimuli, defaults to 0..M-1

    Returns:
        SimilarityMatrix(kind="model")
    """

    if model.correlations is None:
        raise DatasetError("scan {}: denoiser has no validation "
                           "correlations".format(model.scan))

    if len(weights) != model.neurons:
        raise DatasetError("scan {}: {} weights for a {}-neuron denoiser"
                           .format(model.scan, len(weights), model.neurons))

    if stimulus_ids is None:
        stimulus_ids = np.arange(np.shape(stimuli)[0])

    return similarity_from_predictions(model.predict(stimuli), weights,
                                       model.correlations, stimulus_ids, eps)


def denoiser_directory(root, scan):
    return os.path.join(root, "denoiser-{}".format(scan))
