"""Sweep lr/K/layers for criterion 8+9 feasibility."""
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

RES = 6
template = wm.gen_base('bar', RES)
N = template.n_vertices
deforms = [('bend', 0.9), ('bend', -0.9), ('twist', 0.35), ('twist', -0.35)]
held = ('bend', 0.5)
train_meshes = [wm.deform(template, m, g) for m, g in deforms]
test_mesh = wm.deform(template, *held)
remesh_mesh, _ = wm.remesh(test_mesh)

names = ['template'] + [f'train{i}' for i in range(4)] + ['test', 'remesh']
meshes = dict(zip(names, [template] + train_meshes + [test_mesh, remesh_mesh]))

SP = {}
def spectra_for(key, k):
    tag = (key, k)
    if tag not in SP:
        mesh = meshes[key]
        frames = estimate_frames(mesh)
        ops = directional_operators(mesh, frames,
                                    wm.AnisoConfig(alpha=50.0, directions=4))
        SP[tag] = [solve_eigs(o, clamp_k(k, mesh.n_vertices)) for o in ops]
    return SP[tag]

BK = {}
def banks_for(k):
    if k in BK:
        return BK[k]
    lam_max = max(s.lambda_max for key in ['train0','train1','train2','train3']
                  for s in spectra_for(key, k))
    kern = KernelSpec.mexican_hat(lam_max, 4, tighten=False)
    BK[k] = {key: build_filterbank(spectra_for(key, k), kern) for key in names}
    return BK[k]

gt = np.arange(N)
rows_test = corresp.geodesic_rows(test_mesh, np.arange(N))
ra_test = np.sqrt(test_mesh.total_area)
rows_rm = corresp.geodesic_rows(remesh_mesh, np.arange(N))
ra_rm = np.sqrt(remesh_mesh.total_area)

def run(k, feat, layers, lr, perturb, seed, epochs):
    banks = banks_for(k)
    items = [nw.TrainItem(coords=m.vertices, labels=gt, bank=banks[f'train{i}'],
                          name=f'train{i}') for i, m in enumerate(train_meshes)]
    cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, feat), conv_layers=layers,
                         directions=4, scales=4, perturb=perturb, seed=seed)
    model = nw.Model.initialize(cfg, N)
    curve = []
    def snap(model):
        dt_tpl = nw.descriptors(model, template.vertices, banks['template'])
        d_test = nw.descriptors(model, test_mesh.vertices, banks['test'])
        c1 = corresp.match_nn(dt_tpl, d_test)
        a1 = float((rows_test[gt, c1] / ra_test).mean() * 100)
        curve.append(a1)
    snap(model)
    nw.train(model, items, epochs=epochs, lr=lr,
             on_epoch=lambda m, e: snap(m))
    # remesh AGE at the end
    dt_tpl = nw.descriptors(model, template.vertices, banks['template'])
    d_rm = nw.descriptors(model, remesh_mesh.vertices, banks['remesh'])
    c2 = corresp.match_nn(dt_tpl, d_rm)
    a_rm = float((rows_rm[gt, c2] / ra_rm).mean() * 100)
    reach = next((i for i, a in enumerate(curve) if a < 5.0), None)
    return curve, a_rm, reach

variants = [
    # k, feat, layers, lr, epochs
    (64, 64, 3, 3e-4, 40),
    (64, 64, 2, 3e-4, 40),
    (96, 64, 3, 3e-4, 40),
]
for k, feat, layers, lr, epochs in variants:
    for perturb in (True, False):
        t0 = time.time()
        curve, a_rm, reach = run(k, feat, layers, lr, perturb, 0, epochs)
        label = 'P' if perturb else 'V'
        ratio = a_rm / curve[-1]
        print(f'{label} k={k} feat={feat} L={layers} lr={lr:g}: reach={reach} '
              f'final={curve[-1]:.2f} remesh={a_rm:.2f} (x{ratio:.2f}) '
              f'[{time.time()-t0:.0f}s]')
        print('   ', ' '.join(f'{a:.1f}' for a in curve[:25]))
