"""Exploratory driver for the bar correspondence task (criteria 8/9)."""
import sys
import time

import numpy as np

import wavemesh as wm
from wavemesh import network as nw
from wavemesh import corresp
from wavemesh.curvature import estimate_frames
from wavemesh.operators import directional_operators
from wavemesh.spectrum import solve_eigs, clamp_k
from wavemesh.wavelets import build_filterbank, KernelSpec

K = int(sys.argv[1]) if len(sys.argv) > 1 else 128
FEAT = int(sys.argv[2]) if len(sys.argv) > 2 else 64
LAYERS = int(sys.argv[3]) if len(sys.argv) > 3 else 3
EPOCHS = int(sys.argv[4]) if len(sys.argv) > 4 else 40
RES = int(sys.argv[5]) if len(sys.argv) > 5 else 6

t0 = time.time()
template = wm.gen_base('bar', RES)
N = template.n_vertices
print(f'bar res {RES}: {N} vertices, area {template.total_area:.2f}')

deforms = [('bend', 0.9), ('bend', -0.9), ('twist', 0.35), ('twist', -0.35)]
held = ('bend', 0.5)
train_meshes = [wm.deform(template, m, g) for m, g in deforms]
test_mesh = wm.deform(template, *held)
for mm, (mo, ma) in zip(train_meshes, deforms):
    print(f'  {mo} {ma}: distortion {wm.synth.isometry_distortion(template, mm):.4f}')
print(f'  held {held}: distortion {wm.synth.isometry_distortion(template, test_mesh):.4f}')


def make_bank(mesh, directions, alpha):
    frames = estimate_frames(mesh)
    ops = directional_operators(mesh, frames,
                                wm.AnisoConfig(alpha=alpha, directions=directions))
    k = clamp_k(K, mesh.n_vertices)
    spectra = [solve_eigs(o, k) for o in ops]
    kern = KernelSpec.mexican_hat(max(s.lambda_max for s in spectra), 4, tighten=False)
    return build_filterbank(spectra, kern)


def run(directions, alpha, perturb, seed, epochs=EPOCHS, tag=''):
    banks = {}
    for name, mesh in [('template', template), ('test', test_mesh)] + [
            (f'train{i}', m) for i, m in enumerate(train_meshes)]:
        banks[name] = make_bank(mesh, directions, alpha)
    items = [nw.TrainItem(coords=m.vertices, labels=np.arange(N),
                          bank=banks[f'train{i}'], name=f'train{i}')
             for i, m in enumerate(train_meshes)]
    cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, FEAT), conv_layers=LAYERS,
                         directions=directions, scales=4, perturb=perturb, seed=seed)
    model = nw.Model.initialize(cfg, N)

    # precompute geodesic rows on the test target from the gt vertices
    gt = np.arange(N)
    rows = corresp.geodesic_rows(test_mesh, np.arange(N))
    root_area = np.sqrt(test_mesh.total_area)

    ages = []
    def age_now(model):
        ds = nw.descriptors(model, template.vertices, banks['template'])
        dt = nw.descriptors(model, test_mesh.vertices, banks['test'])
        corr = corresp.match_nn(ds, dt)
        err = rows[gt, corr] / root_area
        return float(err.mean() * 100)

    ages.append(age_now(model))  # untrained
    def cb(model, epoch):
        ages.append(age_now(model))
    hist = nw.train(model, items, epochs=epochs, on_epoch=cb)
    reach = next((i for i, a in enumerate(ages) if a < 5.0), None)
    print(f'{tag} dirs={directions} perturb={perturb} seed={seed}: untrained AGE '
          f'{ages[0]:.2f}, final {ages[-1]:.3f}, epochs-to-<5: {reach}, '
          f'final loss {hist[-1][1]:.4f} acc {hist[-1][2]:.3f}')
    return model, banks, ages


t1 = time.time()
model, banks, ages = run(4, 50.0, True, 0, tag='perturbed')
t2 = time.time()
print(f'AGE curve: {[round(a,2) for a in ages]}')
print(f'one run: {t2-t1:.0f}s (setup {t1-t0:.0f}s)')
