#!/usr/bin/env python3
"""
DAE-EDA Bench - EDA com autoencoder denoising e PBIL
CLI de experimentos (instâncias NK, runs, varreduras, relatórios) e navegador de resultados
"""

import os
import sys
import json
import logging
import argparse
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from flask import Flask, request, jsonify, Response
from dotenv import load_dotenv

# Carregar variáveis de ambiente do arquivo .env
load_dotenv()

# Módulos locais
from database import fetch_runs, init_db, runs_frame
from problems.factory import FAMILIES, ProblemSpec, build_problem
from problems.nk_problem import MAX_EXACT_N, generate_nk, load_nk, save_nk, solve_nk_exact
from services.dae_service import TrainConfig, save_model
from services.eda_service import Algorithm, EdaConfig, run_eda
from services.sweep_service import (
    DEFAULT_THRESHOLDS,
    SweepConfig,
    default_max_popsize,
    doubling_popsizes,
    render_curve,
    render_table,
    run_sweep,
    summarize,
    summarize_frame,
    summary_document,
    write_summary_json,
)
from utils.errors import EdaError, InstanceFormatError, SchemaMismatchError, TooLargeError
from utils.population import bitstring_to_str

# Configurar logging
LOG_LEVEL = os.environ.get('EDA_LOG_LEVEL', 'INFO').upper()
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Configurações
PORT = int(os.environ.get('EDA_PORT', 2345))
DB_URL = os.environ.get('EDA_DB_URL') or None
OUTPUT_DIR = os.environ.get('EDA_OUTPUT_DIR', 'results')
WORKERS = max(1, int(os.environ.get('EDA_WORKERS', 1)))

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

# Inicializar Flask
app = Flask(__name__)
app.config['EDA_DB_URL'] = DB_URL

_session_factories: Dict[str, Any] = {}


def get_session_factory():
    """Fábrica de sessões do banco configurado (None se não houver banco)"""
    url = app.config.get('EDA_DB_URL')
    if not url:
        return None
    if url not in _session_factories:
        _session_factories[url] = init_db(url)
    return _session_factories[url]


def create_standardized_response(success: bool, message: str, data: Dict[str, Any] = None) -> Dict[str, Any]:
    """
    Cria resposta padronizada da API

    Args:
        success: Se a operação foi bem-sucedida
        message: Mensagem descritiva
        data: Dados da resposta

    Returns:
        Resposta padronizada
    """
    return {
        "success": success,
        "message": message,
        "data": data if data is not None else {}
    }


def _parse_thresholds(raw: Optional[str]) -> List[float]:
    if not raw:
        return list(DEFAULT_THRESHOLDS)
    return [float(v) for v in raw.split(',') if v.strip()]


@app.route('/health', methods=['GET'])
def health_check():
    """Endpoint de health check"""
    database_ok = False
    try:
        database_ok = get_session_factory() is not None
    except Exception as e:
        logger.warning(f"⚠️ Banco de runs indisponível: {e}")
    return jsonify(create_standardized_response(
        success=True,
        message="healthy",
        data={
            'service': 'DAE-EDA Bench',
            'timestamp': datetime.now().isoformat(),
            'dependencies': {'database': database_ok},
            'config': {'port': PORT, 'output_dir': OUTPUT_DIR},
        }
    ))


@app.route('/runs', methods=['GET'])
def list_runs():
    """Runs registradas, paginadas e com filtro por problema/algoritmo"""
    try:
        factory = get_session_factory()
        if factory is None:
            return jsonify(create_standardized_response(
                success=False,
                message="Banco de runs não configurado (EDA_DB_URL)"
            )), 503
        page = request.args.get('page', 1, type=int)
        per_page = request.args.get('per_page', 50, type=int)
        data = fetch_runs(
            factory, page, per_page,
            problem=request.args.get('problem'),
            algo=request.args.get('algo'),
        )
        return jsonify(create_standardized_response(
            success=True,
            message=f"{len(data['runs'])} run(s)",
            data=data
        ))
    except Exception as e:
        logger.error(f"❌ Erro ao listar runs: {e}")
        return jsonify(create_standardized_response(
            success=False,
            message=f"Erro interno: {str(e)}"
        )), 500


def _summaries_from_db(thresholds: List[float]):
    factory = get_session_factory()
    if factory is None:
        return None
    frame = runs_frame(factory)
    if frame.empty:
        return []
    return summarize_frame(frame, thresholds)


@app.route('/summary', methods=['GET'])
def summary():
    """Resumo (documento JSON validado) calculado a partir do banco"""
    try:
        thresholds = _parse_thresholds(request.args.get('thresholds'))
        summaries = _summaries_from_db(thresholds)
        if summaries is None:
            return jsonify(create_standardized_response(
                success=False,
                message="Banco de runs não configurado (EDA_DB_URL)"
            )), 503
        return jsonify(create_standardized_response(
            success=True,
            message=f"{len(summaries)} grupo(s)",
            data=summary_document(summaries, thresholds)
        ))
    except (EdaError, ValueError) as e:
        return jsonify(create_standardized_response(success=False, message=str(e))), 400
    except Exception as e:
        logger.error(f"❌ Erro ao resumir runs: {e}")
        return jsonify(create_standardized_response(
            success=False,
            message=f"Erro interno: {str(e)}"
        )), 500


@app.route('/report', methods=['GET'])
def report():
    """Tabela em texto no layout de limiares"""
    try:
        summaries = _summaries_from_db(_parse_thresholds(request.args.get('thresholds')))
        if summaries is None:
            return Response("Banco de runs não configurado (EDA_DB_URL)\n", status=503, mimetype='text/plain')
        return Response(render_table(summaries) + "\n", mimetype='text/plain')
    except (EdaError, ValueError) as e:
        return Response(f"{e}\n", status=400, mimetype='text/plain')
    except Exception as e:
        logger.error(f"❌ Erro ao gerar relatório: {e}")
        return Response(f"Erro interno: {e}\n", status=500, mimetype='text/plain')


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

class CliParser(argparse.ArgumentParser):
    """Parser que sai com código 1 em erro de uso"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: erro: {message}\n")


def _int_list(raw: str) -> List[int]:
    try:
        return [int(v) for v in raw.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de inteiros inválida: '{raw}'") from None


def _float_list(raw: str) -> List[float]:
    try:
        return [float(v) for v in raw.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de números inválida: '{raw}'") from None


def _add_problem_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('problema')
    group.add_argument('--problem', required=True, choices=FAMILIES)
    group.add_argument('--n', type=int, help='tamanho do problema')
    group.add_argument('--k', type=int, help='tamanho do bloco (trap) ou epistasia (nk)')
    group.add_argument('--levels', type=int, help='níveis do HIFF (alternativa a --n)')
    group.add_argument('--instance', help='arquivo de instância NK')
    group.add_argument('--instance-seed', type=int, help='seed de geração da instância NK')
    group.add_argument('--trap-permutation-seed', type=int, help='espalha os blocos trap por permutação')


def _add_eda_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--algorithm', choices=[a.value for a in Algorithm], default=Algorithm.DAE.value)
    parser.add_argument('--seed', type=int, required=True)
    parser.add_argument('--max-generations', type=int)
    parser.add_argument('--stall-generations', type=int)
    parser.add_argument('--learning-rate', type=float, default=TrainConfig.learning_rate)
    parser.add_argument('--batch-size', type=int, default=TrainConfig.batch_size)
    parser.add_argument('--corruption-rate', type=float, default=TrainConfig.corruption_rate)
    parser.add_argument('--min-updates', type=int, default=TrainConfig.min_updates,
                        help='passos de gradiente antes dos critérios de parada do treino')
    parser.add_argument('--max-epochs', type=int, default=TrainConfig.max_epochs)


def _problem_spec(args) -> ProblemSpec:
    return ProblemSpec(
        family=args.problem,
        n=args.n,
        k=args.k,
        levels=args.levels,
        seed=args.instance_seed,
        instance_path=args.instance,
        permutation_seed=args.trap_permutation_seed,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        corruption_rate=args.corruption_rate,
        min_updates=args.min_updates,
        max_epochs=args.max_epochs,
    )


def build_parser() -> CliParser:
    parser = CliParser(prog='dae-eda', description='EDA com autoencoder denoising e PBIL')
    parser.add_argument('--verbose', action='store_true', help='log em nível DEBUG')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    p = sub.add_parser('gen-nk', help='gera uma instância NK')
    p.add_argument('--n', type=int, required=True)
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--seed', type=int, required=True)
    p.add_argument('--output', required=True)
    p.add_argument('--no-solve', action='store_true', help=f'não resolver exatamente (n <= {MAX_EXACT_N})')

    p = sub.add_parser('solve-nk', help='resolve uma instância NK por enumeração')
    p.add_argument('--instance', required=True)
    p.add_argument('--output', help='arquivo de saída (padrão: sobrescreve a instância)')

    p = sub.add_parser('run', help='executa uma run do EDA')
    _add_problem_args(p)
    _add_eda_args(p)
    p.add_argument('--popsize', type=int, required=True)
    p.add_argument('--save-model', help='grava o DAE da última geração em JSON')
    p.add_argument('--json', dest='json_path', help='grava o resultado da run em JSON')

    p = sub.add_parser('sweep', help='varredura de tamanhos de população')
    _add_problem_args(p)
    _add_eda_args(p)
    p.add_argument('--popsizes', type=_int_list, help='lista explícita, ex.: 50,100,200')
    p.add_argument('--min-popsize', type=int, default=50)
    p.add_argument('--max-popsize', type=int, help='padrão: 16000 para dae, 512000 para pbil')
    p.add_argument('--runs', type=int, default=20)
    p.add_argument('--output', help=f'CSV de saída (padrão: {OUTPUT_DIR}/<instância>_<algoritmo>.csv)')
    p.add_argument('--workers', type=int, default=WORKERS)
    p.add_argument('--resume', action='store_true', help='mantém o CSV e pula runs já gravadas')
    p.add_argument('--until', type=float, help='para no primeiro popsize com esta taxa de sucesso')
    p.add_argument('--db-url', default=DB_URL, help='espelha as linhas no banco de runs')

    p = sub.add_parser('report', help='resume CSVs de varredura')
    p.add_argument('csv', nargs='+')
    p.add_argument('--thresholds', type=_float_list, default=list(DEFAULT_THRESHOLDS))
    p.add_argument('--curve', action='store_true', help='imprime as linhas por popsize')
    p.add_argument('--json', dest='json_path', help='grava o documento de resumo')

    p = sub.add_parser('serve', help='navegador de resultados')
    p.add_argument('--port', type=int, default=PORT)
    p.add_argument('--db-url', default=DB_URL)

    return parser


def cmd_gen_nk(args) -> int:
    instance = generate_nk(args.n, args.k, args.seed)
    if not args.no_solve:
        if args.n > MAX_EXACT_N:
            logger.warning(f"⚠️ n={args.n} acima de {MAX_EXACT_N}; instância gravada sem ótimo")
        else:
            genome, fitness = solve_nk_exact(instance)
            instance = instance.with_optimum(genome, fitness, exact=True)
    save_nk(instance, args.output)
    print(args.output)
    return EXIT_OK


def cmd_solve_nk(args) -> int:
    instance = load_nk(args.instance)
    genome, fitness = solve_nk_exact(instance)
    save_nk(instance.with_optimum(genome, fitness, exact=True), args.output or args.instance)
    print(f"{bitstring_to_str(genome)} {fitness:.17g}")
    return EXIT_OK


def cmd_run(args) -> int:
    problem = build_problem(_problem_spec(args))
    cfg = EdaConfig.for_algorithm(
        args.algorithm, args.popsize, args.seed,
        max_generations=args.max_generations,
        stall_generations=args.stall_generations,
        train=_train_config(args),
    )
    record = run_eda(problem, cfg)
    result = {
        'instance_id': problem.instance_id,
        'algo': cfg.algorithm.value,
        'popsize': cfg.popsize,
        **record.comparable(),
        'wall_ms': round(record.wall_time_ms, 3),
    }
    result.pop('history')
    print(json.dumps(result, indent=2))
    if args.json_path:
        Path(args.json_path).write_text(json.dumps(result, indent=2))
        logger.info(f"💾 Resultado salvo em {args.json_path}")
    if args.save_model:
        if record.model is None:
            logger.warning("⚠️ Nenhum DAE treinado nesta run; modelo não gravado")
        else:
            save_model(record.model, args.save_model)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _problem_spec(args)
    problem = build_problem(spec)
    popsizes = args.popsizes or doubling_popsizes(
        args.min_popsize, args.max_popsize or default_max_popsize(args.algorithm)
    )
    output = args.output or str(Path(OUTPUT_DIR) / f"{problem.instance_id}_{args.algorithm}.csv")
    cfg = SweepConfig(
        problem=spec,
        algorithm=args.algorithm,
        popsizes=popsizes,
        runs=args.runs,
        base_seed=args.seed,
        output_path=output,
        workers=args.workers,
        resume=args.resume,
        max_generations=args.max_generations,
        stall_generations=args.stall_generations,
        train=_train_config(args),
        db_url=args.db_url,
        stop_at_success_rate=args.until,
    )
    run_sweep(cfg, problem)
    print(output)
    return EXIT_OK


def cmd_report(args) -> int:
    summaries = summarize(args.csv, args.thresholds)
    print(render_table(summaries))
    if args.curve:
        for s in summaries:
            print()
            print(render_curve(s))
    if args.json_path:
        write_summary_json(summaries, args.json_path, args.thresholds)
    return EXIT_OK


def cmd_serve(args) -> int:
    app.config['EDA_DB_URL'] = args.db_url
    logger.info(f"🌐 Servidor rodando na porta {args.port}")
    app.run(host='0.0.0.0', port=args.port)
    return EXIT_OK


COMMANDS = {
    'gen-nk': cmd_gen_nk,
    'solve-nk': cmd_solve_nk,
    'run': cmd_run,
    'sweep': cmd_sweep,
    'report': cmd_report,
    'serve': cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Ponto de entrada da CLI

    Returns:
        0 sucesso, 1 erro de uso, 2 falha em tempo de execução
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return COMMANDS[args.command](args)
    except (InstanceFormatError, SchemaMismatchError, OSError) as e:
        logger.error(f"❌ Erro ao ler ou gravar arquivos: {e}")
        return EXIT_FAILURE
    except TooLargeError as e:
        logger.error(f"❌ Instância grande demais: {e}")
        return EXIT_FAILURE
    except ValueError as e:
        logger.error(f"❌ Argumentos inválidos: {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"❌ Falha na execução: {type(e).__name__}: {e}")
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
